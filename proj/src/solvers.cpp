#include "collabrep/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "collabrep/errors.hpp"
#include "collabrep/rng.hpp"

namespace collabrep {
namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::NonPositiveLambda, "lambda must be positive and finite");
}

void check_dims(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size())
    fail(ErrorCode::DimensionMismatch,
         "query has dimension " + std::to_string(y.size()) +
             ", dictionary has " + std::to_string(x.rows()) + " rows");
  if (x.cols() == 0) fail(ErrorCode::DimensionMismatch, "dictionary has no columns");
}

double ridge_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& alpha, double lambda) {
  return (y - x * alpha).squaredNorm() + lambda * alpha.squaredNorm();
}

double lasso_objective(const Eigen::VectorXd& fit_residual,
                       const Eigen::VectorXd& alpha, double lambda) {
  return fit_residual.squaredNorm() + lambda * alpha.lpNorm<1>();
}

// One accelerated proximal-gradient run of the l1-regularized least squares
// problem, optionally warm-started.
CodingResult fista_from(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        double lambda, const FistaParams& params, double norm_sq,
                        const Eigen::VectorXd& start) {
  // Written for the equivalent objective 0.5||y - Xa||^2 + (lambda/2)||a||_1,
  // whose gradient has Lipschitz constant ||X||_2^2.
  const double lip = norm_sq > 0.0 ? norm_sq : 1.0;
  const double step = 1.0 / lip;
  const double thresh = 0.5 * lambda * step;

  CodingResult out;
  Eigen::VectorXd a = start;
  Eigen::VectorXd xa = x * a;
  Eigen::VectorXd z = a;
  Eigen::VectorXd xz = xa;
  double t = 1.0;
  double f = lasso_objective(y - xa, a, lambda);
  if (params.record_trace) out.trace.push_back(f);

  Eigen::VectorXd a_next(a.size());
  Eigen::VectorXd xa_next(y.size());
  int iter = 0;
  bool converged = false;
  while (iter < params.max_iter) {
    ++iter;
    a_next = shrink(z - step * (x.transpose() * (xz - y)), thresh);
    xa_next.noalias() = x * a_next;
    double f_next = lasso_objective(y - xa_next, a_next, lambda);
    double t_next;

    if (f_next > f) {
      // Restart: drop momentum and take a plain proximal step from `a`.
      a_next = shrink(a - step * (x.transpose() * (xa - y)), thresh);
      xa_next.noalias() = x * a_next;
      f_next = lasso_objective(y - xa_next, a_next, lambda);
      if (f_next > f) {
        a_next = a;
        xa_next = xa;
        f_next = f;
      }
      t_next = 1.0;
      z = a_next;
      xz = xa_next;
    } else {
      t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      z = a_next + beta * (a_next - a);
      xz = xa_next + beta * (xa_next - xa);
    }

    const double change = std::abs(f - f_next);
    a.swap(a_next);
    xa.swap(xa_next);
    f = f_next;
    t = t_next;
    if (params.record_trace) out.trace.push_back(f);
    if (change <= params.tol * std::max(f, std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
  }

  out.alpha = std::move(a);
  out.objective = f;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

// Least-squares refit on a support set; returns coefficients over the set.
Eigen::VectorXd refit(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& support,
                      const Eigen::VectorXd& y) {
  Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i)
    sub.col(static_cast<Eigen::Index>(i)) = x.col(support[i]);
  return sub.colPivHouseholderQr().solve(y);
}

struct OmpState {
  Eigen::VectorXd alpha;
  std::vector<double> residual_norms;
};

OmpState run_omp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k) {
  check_dims(x, y);
  if (k < 1 || k > x.cols())
    fail(ErrorCode::BadSparsity, "sparsity level must lie in [1, n]");

  OmpState st;
  st.alpha = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd residual = y;
  st.residual_norms.push_back(residual.norm());
  std::vector<Eigen::Index> support;
  std::vector<bool> used(static_cast<std::size_t>(x.cols()), false);
  const double floor = 1e-14 * std::max(y.norm(), 1e-300);

  for (int step = 0; step < k; ++step) {
    if (residual.norm() <= floor) break;
    Eigen::VectorXd corr = (x.transpose() * residual).cwiseAbs();
    Eigen::Index best = -1;
    double best_val = -1.0;
    for (Eigen::Index j = 0; j < corr.size(); ++j) {
      if (!used[static_cast<std::size_t>(j)] && corr[j] > best_val) {
        best_val = corr[j];
        best = j;
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = true;
    support.push_back(best);

    const Eigen::VectorXd coef = refit(x, support, y);
    st.alpha.setZero();
    for (std::size_t i = 0; i < support.size(); ++i)
      st.alpha[support[i]] = coef[static_cast<Eigen::Index>(i)];
    residual = y - x * st.alpha;
    st.residual_norms.push_back(residual.norm());
  }
  // Early exit on an exact fit: remaining levels share the last residual.
  while (static_cast<int>(st.residual_norms.size()) < k + 1)
    st.residual_norms.push_back(st.residual_norms.back());
  return st;
}

double lp_norm(const Eigen::VectorXd& a, int p) {
  return p == 1 ? a.lpNorm<1>() : a.norm();
}

}  // namespace

void AlmParams::validate() const {
  if (!(mu0 > 0.0) || !(rho > 1.0) || !(mu_max >= mu0) || !(tol > 0.0) ||
      max_iter < 1)
    fail(ErrorCode::BadParams,
         "ALM parameters need mu0 > 0, rho > 1, mu_max >= mu0, tol > 0, max_iter >= 1");
}

void FistaParams::validate() const {
  if (!(tol > 0.0) || max_iter < 1)
    fail(ErrorCode::BadParams, "FISTA parameters need tol > 0 and max_iter >= 1");
}

RidgeFamily::RidgeFamily(const Eigen::MatrixXd& x) : x_(x) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  s_ = svd.singularValues();
  v_ = svd.matrixV();
}

Eigen::VectorXd RidgeFamily::apply(double c, const Eigen::VectorXd& v) const {
  Eigen::VectorXd coef = u_.transpose() * v;
  const double cutoff = s_.size() > 0 ? 1e-10 * s_[0] : 0.0;
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    const double s = s_[i];
    if (c == 0.0 && s <= cutoff) {
      coef[i] = 0.0;
    } else {
      coef[i] *= s / (s * s + c);
    }
  }
  return v_ * coef;
}

std::shared_ptr<const RidgeFamily> RidgeFamilyCache::get(const Dictionary& dict) {
  std::lock_guard lock(mutex_);
  auto& slot = entries_[dict.fingerprint()];
  if (!slot) slot = std::make_shared<const RidgeFamily>(dict.data());
  return slot;
}

std::size_t RidgeFamilyCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void RidgeFamilyCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

RidgeFamilyCache& RidgeFamilyCache::global() {
  static RidgeFamilyCache cache;
  return cache;
}

Eigen::VectorXd shrink(const Eigen::VectorXd& x, double threshold) {
  if (!(threshold >= 0.0))
    fail(ErrorCode::NegativeThreshold, "shrinkage threshold must be nonnegative");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x[i]) - threshold;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
  return out;
}

CodingResult solve_rls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       double lambda) {
  check_dims(x, y);
  check_lambda(lambda);
  // Through the SVD the error grows with cond(X), not cond(X)^2 as with
  // the normal equations.
  CodingResult out;
  out.alpha = RidgeFamily(x).apply(lambda, y);
  out.objective = ridge_objective(x, y, out.alpha, lambda);
  out.converged = true;
  return out;
}

CodingResult solve_rls(const Dictionary& dict, const Projector& projector,
                       const Eigen::VectorXd& y) {
  if (projector.fingerprint() != dict.fingerprint())
    fail(ErrorCode::FingerprintMismatch, "projector was built from another dictionary");
  check_dims(dict.data(), y);
  CodingResult out;
  out.alpha = projector.matrix() * y;
  out.objective = ridge_objective(dict.data(), y, out.alpha, projector.lambda());
  out.converged = true;
  return out;
}

CodingResult solve_alm_l1res(const RidgeFamily& family, const Eigen::VectorXd& y,
                             double lambda, const AlmParams& params) {
  const Eigen::MatrixXd& x = family.matrix();
  check_dims(x, y);
  check_lambda(lambda);
  params.validate();

  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  const double y_norm = y.norm();
  double mu = params.mu0;

  CodingResult out;
  int iter = 0;
  while (iter < params.max_iter) {
    ++iter;
    const double inv_mu = 1.0 / mu;
    Eigen::VectorXd alpha_next = family.apply(2.0 * lambda * inv_mu, y - e + inv_mu * z);
    const Eigen::VectorXd fit = x * alpha_next;
    Eigen::VectorXd e_next = shrink(y - fit + inv_mu * z, inv_mu);
    const Eigen::VectorXd gap = y - fit - e_next;
    z += mu * gap;

    // Stationarity in alpha after the multiplier update is off by exactly
    // mu X^T (e_next - e).
    const double dual = mu * (x.transpose() * (e_next - e)).norm();
    const double change =
        std::sqrt((alpha_next - alpha).squaredNorm() + (e_next - e).squaredNorm());
    const double size = std::sqrt(alpha_next.squaredNorm() + e_next.squaredNorm());
    alpha.swap(alpha_next);
    e.swap(e_next);

    if (gap.norm() <= params.tol * y_norm && change <= params.tol * size &&
        dual <= params.tol * (1.0 + alpha.norm())) {
      out.converged = true;
      break;
    }
    mu = std::min(mu * params.rho, params.mu_max);
  }

  out.objective = e.lpNorm<1>() + lambda * alpha.squaredNorm();
  out.iterations = iter;
  out.alpha = std::move(alpha);
  out.residual = std::move(e);
  out.multiplier = std::move(z);
  return out;
}

CodingResult solve_alm_l1res(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double lambda, const AlmParams& params) {
  check_dims(x, y);
  check_lambda(lambda);
  params.validate();
  return solve_alm_l1res(RidgeFamily(x), y, lambda, params);
}

double spectral_norm_sq(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd v = rng.normal_vector(x.cols());
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd w = x.transpose() * (x * v);
    const double next = v.dot(w);
    const double w_norm = w.norm();
    if (w_norm == 0.0) return 0.0;
    v = w / w_norm;
    if (it > 0 && std::abs(next - estimate) <= 1e-6 * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

CodingResult solve_fista_l1(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda, const FistaParams& params,
                            std::optional<double> norm_sq) {
  check_dims(x, y);
  check_lambda(lambda);
  params.validate();
  // Power iteration approaches from below; a small margin keeps the step safe.
  const double l = norm_sq ? *norm_sq : spectral_norm_sq(x) * 1.01;
  return fista_from(x, y, lambda, params, l, Eigen::VectorXd::Zero(x.cols()));
}

CodingResult solve_omp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k) {
  OmpState st = run_omp(x, y, k);
  CodingResult out;
  out.alpha = std::move(st.alpha);
  out.objective = (y - x * out.alpha).squaredNorm();
  out.iterations = k;
  out.converged = true;
  return out;
}

std::vector<double> omp_residual_path(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y, int k) {
  return run_omp(x, y, k).residual_norms;
}

std::vector<double> lagrangian_sweep_lambdas() {
  constexpr int kPoints = 60;
  std::vector<double> out;
  out.reserve(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    const double exponent = 3.0 - 9.0 * i / (kPoints - 1);
    out.push_back(std::pow(10.0, exponent));
  }
  return out;
}

std::vector<CurvePoint> solve_constrained_lp(const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y, int p,
                                             std::span<const double> grid) {
  check_dims(x, y);
  if (p != 0 && p != 1 && p != 2) fail(ErrorCode::BadParams, "p must be 0, 1 or 2");
  if (grid.empty()) fail(ErrorCode::BadGrid, "grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      fail(ErrorCode::BadGrid, "grid values must be finite and nonnegative");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      fail(ErrorCode::BadGrid, "grid must be strictly increasing");
  }

  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());

  if (p == 0) {
    for (double eps : grid)
      if (eps != std::floor(eps))
        fail(ErrorCode::BadGrid, "p = 0 grid values must be integer sparsity levels");
    const int max_k = static_cast<int>(std::min<double>(grid.back(), static_cast<double>(x.cols())));
    const std::vector<double> path =
        max_k >= 1 ? omp_residual_path(x, y, max_k) : std::vector<double>{y.norm()};
    for (double eps : grid) {
      const auto k = static_cast<std::size_t>(std::min<double>(eps, max_k));
      curve.push_back({eps, path[k]});
    }
    return curve;
  }

  // Lagrangian path: (||a||_p, ||y - X a||) pairs, plus the a = 0 endpoint.
  std::vector<std::pair<double, double>> frontier;
  frontier.emplace_back(0.0, y.norm());
  const auto lambdas = lagrangian_sweep_lambdas();
  if (p == 2) {
    const RidgeFamily family(x);
    for (double lambda : lambdas) {
      const Eigen::VectorXd a = family.apply(lambda, y);
      frontier.emplace_back(a.norm(), (y - x * a).norm());
    }
    // The lambda -> 0 end of the ridge path.
    const Eigen::VectorXd a = family.apply(0.0, y);
    frontier.emplace_back(a.norm(), (y - x * a).norm());
  } else {
    const double l = spectral_norm_sq(x) * 1.01;
    FistaParams params;
    params.tol = 1e-10;
    params.max_iter = 20000;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
    for (double lambda : lambdas) {
      CodingResult r = fista_from(x, y, lambda, params, l, warm);
      frontier.emplace_back(lp_norm(r.alpha, 1), (y - x * r.alpha).norm());
      warm = std::move(r.alpha);
    }
  }

  for (double eps : grid) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [norm, res] : frontier)
      if (norm <= eps) best = std::min(best, res);
    curve.push_back({eps, best});
  }
  return curve;
}

}  // namespace collabrep
