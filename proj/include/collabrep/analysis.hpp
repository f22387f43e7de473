#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "collabrep/dictionary.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

struct Histogram {
  std::vector<double> edges;  // bins + 1 increasing values
  std::vector<double> mass;   // normalized counts, sums to 1
};

struct FitReport {
  Histogram histogram;
  double kl_gaussian = 0.0;
  double kl_laplacian = 0.0;
  double gaussian_mean = 0.0;
  double gaussian_stddev = 0.0;
  double laplacian_location = 0.0;
  double laplacian_scale = 0.0;
};

// Histogram symmetric about zero whose half-width is the larger magnitude of
// the 0.1th and 99.9th percentiles. Samples outside the range are dropped.
Histogram symmetric_histogram(std::span<const double> samples, int bins);

// Fitted probability of each histogram bin, renormalized over the range.
std::vector<double> gaussian_bin_masses(std::span<const double> edges, double mean,
                                        double stddev);
std::vector<double> laplacian_bin_masses(std::span<const double> edges,
                                         double location, double scale);

// sum_i p_i log(p_i / q_i) over bins with p_i > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Gaussian (mean / stddev) and Laplacian (median / mean absolute deviation)
// maximum-likelihood fits, each scored by KL against the histogram.
// Needs >= 100 samples and >= 10 bins.
FitReport coef_distribution_fit(std::span<const double> coefs, int bins = 101);

// One residual-vs-epsilon curve per class dictionary.
std::vector<std::vector<CurvePoint>> residual_eps_study(
    std::span<const Eigen::MatrixXd> class_dicts, const Eigen::VectorXd& y, int p,
    std::span<const double> grid);

struct GeometryReport {
  double r_total_sq = 0.0;  // ||y - X_i a_i||^2
  double r_perp_sq = 0.0;   // ||y - y_hat||^2
  double r_star_sq = 0.0;   // ||y_hat - X_i a_i||^2
  double sin_identity_lhs = 0.0;
  double sin_identity_rhs = 0.0;
};

// Least-squares collaborative fit y_hat = X a and the class-i decomposition of
// its residual; the right-hand side is
//   sin^2(y_hat, chi_i) ||y_hat||^2 / sin^2(chi_i, chi_bar_i).
// Throws DegenerateAngle when chi_i or chi_bar_i vanishes.
GeometryReport geometry_check(const Dictionary& dict, const Eigen::VectorXd& y,
                              std::string_view label);

struct PerturbationReport {
  double xi = 0.0;      // ||Delta||_F / ||X_i||_F
  double lhs = 0.0;     // ||r_j - r_i|| / ||y||
  double kappa = 0.0;   // s_max / s_min of X_i
  double rhs_first_order = 0.0;  // xi (1 + kappa) min(1, m - n)
  bool small_perturbation = false;  // xi <= s_min / s_max
};

// Least-squares residuals of y over X_i and X_i + Delta. Throws RankDeficient
// when X_i has more columns than rows or s_min <= 1e-10 s_max.
PerturbationReport perturbation_demo(const Eigen::MatrixXd& x_i,
                                     const Eigen::MatrixXd& delta,
                                     const Eigen::VectorXd& y);

nlohmann::json to_json(const FitReport& r);
nlohmann::json to_json(const GeometryReport& r);
nlohmann::json to_json(const PerturbationReport& r);

}  // namespace collabrep
