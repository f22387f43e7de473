#include "collabrep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "collabrep/errors.hpp"

namespace collabrep {
namespace {

double quantile(std::vector<double> sorted_copy, double q) {
  // Linear interpolation between order statistics.
  const double pos = q * static_cast<double>(sorted_copy.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_copy.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_copy[lo] * (1.0 - frac) + sorted_copy[hi] * frac;
}

double gaussian_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

double laplacian_cdf(double x, double location, double scale) {
  const double t = (x - location) / scale;
  return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
}

template <typename Cdf>
std::vector<double> bin_masses(std::span<const double> edges, Cdf cdf) {
  std::vector<double> q;
  q.reserve(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    q.push_back(std::max(cdf(edges[i + 1]) - cdf(edges[i]), 0.0));
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (total > 0.0)
    for (double& v : q) v /= total;
  return q;
}

double sin_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double c = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
  return 1.0 - c * c;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  return svd.solve(y);
}

}  // namespace

Histogram symmetric_histogram(std::span<const double> samples, int bins) {
  if (samples.empty()) fail(ErrorCode::TooFewSamples, "no samples");
  if (bins < 1) fail(ErrorCode::BadParams, "bins must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double half = std::max(std::abs(quantile(sorted, 0.001)),
                         std::abs(quantile(sorted, 0.999)));
  if (!(half > 0.0)) half = 1.0;

  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = -half + 2.0 * half * i / bins;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  std::size_t kept = 0;
  for (double s : sorted) {
    if (s < -half || s > half) continue;
    auto bin = static_cast<int>(std::floor((s + half) / (2.0 * half) * bins));
    bin = std::clamp(bin, 0, bins - 1);
    h.mass[static_cast<std::size_t>(bin)] += 1.0;
    ++kept;
  }
  for (double& m : h.mass) m /= static_cast<double>(kept);
  return h;
}

std::vector<double> gaussian_bin_masses(std::span<const double> edges, double mean,
                                        double stddev) {
  return bin_masses(edges, [&](double x) { return gaussian_cdf(x, mean, stddev); });
}

std::vector<double> laplacian_bin_masses(std::span<const double> edges,
                                         double location, double scale) {
  return bin_masses(edges, [&](double x) { return laplacian_cdf(x, location, scale); });
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    fail(ErrorCode::DimensionMismatch, "KL inputs differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], 1e-300));
  }
  return kl;
}

FitReport coef_distribution_fit(std::span<const double> coefs, int bins) {
  if (coefs.size() < 100)
    fail(ErrorCode::TooFewSamples, "distribution fit needs at least 100 samples");
  if (bins < 10) fail(ErrorCode::BadParams, "distribution fit needs at least 10 bins");

  FitReport r;
  const double count = static_cast<double>(coefs.size());
  r.gaussian_mean = std::accumulate(coefs.begin(), coefs.end(), 0.0) / count;
  double ss = 0.0;
  for (double c : coefs) ss += (c - r.gaussian_mean) * (c - r.gaussian_mean);
  r.gaussian_stddev = std::sqrt(ss / count);

  std::vector<double> sorted(coefs.begin(), coefs.end());
  std::sort(sorted.begin(), sorted.end());
  r.laplacian_location = quantile(sorted, 0.5);
  double mad = 0.0;
  for (double c : coefs) mad += std::abs(c - r.laplacian_location);
  r.laplacian_scale = mad / count;

  // Constant samples would give zero-width fits.
  const double floor = 1e-300;
  r.gaussian_stddev = std::max(r.gaussian_stddev, floor);
  r.laplacian_scale = std::max(r.laplacian_scale, floor);

  r.histogram = symmetric_histogram(coefs, bins);
  r.kl_gaussian = kl_divergence(
      r.histogram.mass,
      gaussian_bin_masses(r.histogram.edges, r.gaussian_mean, r.gaussian_stddev));
  r.kl_laplacian = kl_divergence(
      r.histogram.mass,
      laplacian_bin_masses(r.histogram.edges, r.laplacian_location, r.laplacian_scale));
  return r;
}

std::vector<std::vector<CurvePoint>> residual_eps_study(
    std::span<const Eigen::MatrixXd> class_dicts, const Eigen::VectorXd& y, int p,
    std::span<const double> grid) {
  if (class_dicts.empty()) fail(ErrorCode::EmptyInput, "no class dictionaries");
  std::vector<std::vector<CurvePoint>> curves;
  curves.reserve(class_dicts.size());
  for (const auto& x : class_dicts) curves.push_back(solve_constrained_lp(x, y, p, grid));
  return curves;
}

GeometryReport geometry_check(const Dictionary& dict, const Eigen::VectorXd& y,
                              std::string_view label) {
  if (y.size() != dict.dim())
    fail(ErrorCode::DimensionMismatch, "query dimension differs from dictionary");
  const auto& range = dict.range(label);
  const Eigen::VectorXd alpha = least_squares(dict.data(), y);
  const Eigen::VectorXd y_hat = dict.data() * alpha;
  const Eigen::VectorXd chi = dict.data().middleCols(range.begin, range.size()) *
                              alpha.segment(range.begin, range.size());
  const Eigen::VectorXd chi_bar = y_hat - chi;

  const double tiny = 1e-12;
  if (chi.norm() < tiny || chi_bar.norm() < tiny)
    fail(ErrorCode::DegenerateAngle, "class or complement reconstruction vanishes");
  const double denom = sin_sq(chi, chi_bar);
  if (!(denom > 0.0))
    fail(ErrorCode::DegenerateAngle, "class and complement reconstructions are collinear");

  GeometryReport r;
  r.r_total_sq = (y - chi).squaredNorm();
  r.r_perp_sq = (y - y_hat).squaredNorm();
  r.r_star_sq = (y_hat - chi).squaredNorm();
  r.sin_identity_lhs = r.r_star_sq;
  r.sin_identity_rhs = sin_sq(y_hat, chi) * y_hat.squaredNorm() / denom;
  return r;
}

PerturbationReport perturbation_demo(const Eigen::MatrixXd& x_i,
                                     const Eigen::MatrixXd& delta,
                                     const Eigen::VectorXd& y) {
  if (delta.rows() != x_i.rows() || delta.cols() != x_i.cols() || y.size() != x_i.rows())
    fail(ErrorCode::DimensionMismatch, "perturbation shapes disagree");
  const Eigen::Index m = x_i.rows();
  const Eigen::Index n = x_i.cols();
  if (n == 0 || n > m) fail(ErrorCode::RankDeficient, "X_i must have full column rank");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x_i);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s[n - 1] > 1e-10 * s[0]))
    fail(ErrorCode::RankDeficient, "X_i is numerically rank deficient");

  const Eigen::MatrixXd x_j = x_i + delta;
  const Eigen::VectorXd r_i = y - x_i * least_squares(x_i, y);
  const Eigen::VectorXd r_j = y - x_j * least_squares(x_j, y);

  PerturbationReport rep;
  rep.xi = delta.norm() / x_i.norm();
  rep.lhs = (r_j - r_i).norm() / y.norm();
  rep.kappa = s[0] / s[n - 1];
  rep.rhs_first_order =
      rep.xi * (1.0 + rep.kappa) * static_cast<double>(std::min<Eigen::Index>(1, m - n));
  rep.small_perturbation = rep.xi <= s[n - 1] / s[0];
  return rep;
}

nlohmann::json to_json(const FitReport& r) {
  return {{"histogram", {{"edges", r.histogram.edges}, {"mass", r.histogram.mass}}},
          {"kl_gaussian", r.kl_gaussian},
          {"kl_laplacian", r.kl_laplacian},
          {"gaussian_params", {{"mean", r.gaussian_mean}, {"stddev", r.gaussian_stddev}}},
          {"laplacian_params",
           {{"location", r.laplacian_location}, {"scale", r.laplacian_scale}}}};
}

nlohmann::json to_json(const GeometryReport& r) {
  return {{"r_total_sq", r.r_total_sq},
          {"r_perp_sq", r.r_perp_sq},
          {"r_star_sq", r.r_star_sq},
          {"sin_identity_lhs", r.sin_identity_lhs},
          {"sin_identity_rhs", r.sin_identity_rhs}};
}

nlohmann::json to_json(const PerturbationReport& r) {
  return {{"xi", r.xi},
          {"lhs", r.lhs},
          {"kappa", r.kappa},
          {"rhs_first_order", r.rhs_first_order},
          {"small_perturbation", r.small_perturbation}};
}

}  // namespace collabrep
