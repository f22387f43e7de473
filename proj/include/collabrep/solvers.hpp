#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "collabrep/dictionary.hpp"

namespace collabrep {

struct CodingResult {
  Eigen::VectorXd alpha;
  // Sparse residual e; only the l1-fidelity solver fills it.
  std::optional<Eigen::VectorXd> residual;
  // Final Lagrange multiplier of the l1-fidelity solver.
  std::optional<Eigen::VectorXd> multiplier;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Per-iteration objective values, filled when the solver was asked to.
  std::vector<double> trace;
};

// Penalty schedule mu_{k+1} = min(rho * mu_k, mu_max).
struct AlmParams {
  double mu0 = 1.0;
  double rho = 1.2;
  double mu_max = 10.0;
  double tol = 1e-6;
  int max_iter = 500;

  void validate() const;
};

struct FistaParams {
  double tol = 1e-8;
  int max_iter = 5000;
  bool record_trace = false;

  void validate() const;
};

// Thin SVD of a dictionary matrix. Applies the ridge projector
// (X^T X + c I)^{-1} X^T for any c >= 0 in O(r (m + n)).
class RidgeFamily {
 public:
  explicit RidgeFamily(const Eigen::MatrixXd& x);

  const Eigen::MatrixXd& matrix() const { return x_; }
  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }
  const Eigen::VectorXd& singular_values() const { return s_; }

  // (X^T X + c I)^{-1} X^T v; at c = 0 this is the minimum-norm least-squares
  // solution, with singular values below 1e-10 * s_max treated as zero.
  Eigen::VectorXd apply(double c, const Eigen::VectorXd& v) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd v_;
};

// Shared, thread-safe store of RidgeFamily objects keyed by dictionary
// fingerprint. Concurrent lookups of the same key build it once.
class RidgeFamilyCache {
 public:
  std::shared_ptr<const RidgeFamily> get(const Dictionary& dict);
  std::size_t size() const;
  void clear();

  static RidgeFamilyCache& global();

 private:
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const RidgeFamily>> entries_;
};

Eigen::VectorXd shrink(const Eigen::VectorXd& x, double threshold);

// argmin ||y - X a||^2 + lambda ||a||^2, computed from a thin SVD of X.
CodingResult solve_rls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       double lambda);
// Same minimizer through a precomputed projector (alpha = P y).
CodingResult solve_rls(const Dictionary& dict, const Projector& projector,
                       const Eigen::VectorXd& y);

// argmin ||y - X a - e||_1-fidelity problem
//   min ||e||_1 + lambda ||a||^2  s.t.  y = X a + e
// by inexact augmented Lagrangian iteration.
CodingResult solve_alm_l1res(const RidgeFamily& family, const Eigen::VectorXd& y,
                             double lambda, const AlmParams& params = {});
CodingResult solve_alm_l1res(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double lambda, const AlmParams& params = {});

// Largest eigenvalue of X^T X by power iteration (relative change <= 1e-6).
double spectral_norm_sq(const Eigen::MatrixXd& x);

// argmin ||y - X a||^2 + lambda ||a||_1 by accelerated proximal gradient with
// monotone restarts. `norm_sq` is ||X||_2^2 when already known.
CodingResult solve_fista_l1(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda, const FistaParams& params = {},
                            std::optional<double> norm_sq = std::nullopt);

// Greedy sparse coding with a least-squares refit on the support after every
// selection. At most k nonzeros.
CodingResult solve_omp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k);

// Residual norms of OMP after each of the first k selections; entry 0 is ||y||.
std::vector<double> omp_residual_path(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y, int k);

struct CurvePoint {
  double epsilon = 0.0;
  double residual = 0.0;
};

// Residual r(eps) of min ||y - X a||_2 s.t. ||a||_p <= eps for p in {0, 1, 2}.
// p = 0 treats eps as a sparsity level. The curve is nonincreasing in eps.
std::vector<CurvePoint> solve_constrained_lp(const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y, int p,
                                             std::span<const double> grid);

// Lambda values used by the Lagrangian sweep: 60 points log-uniform on
// [1e-6, 1e3], descending.
std::vector<double> lagrangian_sweep_lambdas();

}  // namespace collabrep
