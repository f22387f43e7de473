#include "collabrep/classifiers.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "collabrep/errors.hpp"

namespace collabrep {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroCoef = 1e-12;

void check_query(const Dictionary& dict, const Eigen::VectorXd& y) {
  if (y.size() != dict.dim())
    fail(ErrorCode::DimensionMismatch,
         "query has dimension " + std::to_string(y.size()) + ", dictionary has " +
             std::to_string(dict.dim()));
}

// SCI is reported for coding-vector classifiers when there are two or more
// classes.
Decision finish(const Dictionary& dict, std::vector<double> residuals,
                CodingResult coding, bool with_sci = true) {
  Decision d;
  d.predicted_index = argmin_class(residuals);
  d.predicted = dict.classes()[d.predicted_index].label;
  d.degenerate = true;
  for (double r : residuals)
    if (std::isfinite(r)) d.degenerate = false;
  d.residuals = std::move(residuals);
  if (with_sci && dict.num_classes() > 1) d.sci = compute_sci(dict, coding);
  d.coding = std::move(coding);
  return d;
}

// Per-class scores from a collaborative code; `offset` is subtracted from
// every class reconstruction (the e of R-CRC) when present.
std::vector<double> collaborative_scores(const Dictionary& dict, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd* offset,
                                         DecisionRule rule) {
  Eigen::VectorXd base = y;
  if (offset) base -= *offset;
  std::vector<double> scores;
  scores.reserve(dict.num_classes());
  for (std::size_t k = 0; k < dict.num_classes(); ++k) {
    const auto& c = dict.classes()[k];
    const auto a_k = alpha.segment(c.begin, c.size());
    const double fit = (base - dict.block(k) * a_k).norm();
    if (rule == DecisionRule::PlainResidual) {
      scores.push_back(fit);
    } else {
      const double energy = a_k.norm();
      scores.push_back(energy < kZeroCoef ? kInf : fit / energy);
    }
  }
  return scores;
}

}  // namespace

Eigen::VectorXd normalize_query(const Eigen::VectorXd& y) {
  const double norm = y.norm();
  if (norm == 0.0 || !std::isfinite(norm)) return y;
  return y / norm;
}

std::size_t argmin_class(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] < scores[best]) best = k;
  return best;
}

Decision classify_src(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                      const FistaParams& params, std::optional<double> norm_sq) {
  check_query(dict, y);
  const Eigen::VectorXd q = normalize_query(y);
  CodingResult coding = solve_fista_l1(dict.data(), q, lambda, params, norm_sq);
  auto scores =
      collaborative_scores(dict, q, coding.alpha, nullptr, DecisionRule::PlainResidual);
  return finish(dict, std::move(scores), std::move(coding));
}

Decision classify_crc_rls(const Projector& projector, const Dictionary& dict,
                          const Eigen::VectorXd& y, DecisionRule rule) {
  if (projector.fingerprint() != dict.fingerprint())
    fail(ErrorCode::FingerprintMismatch, "projector was built from another dictionary");
  check_query(dict, y);
  const Eigen::VectorXd q = normalize_query(y);
  CodingResult coding = solve_rls(dict, projector, q);
  auto scores = collaborative_scores(dict, q, coding.alpha, nullptr, rule);
  return finish(dict, std::move(scores), std::move(coding));
}

Decision classify_rcrc(const Dictionary& dict, const RidgeFamily& family,
                       const Eigen::VectorXd& y, double lambda, const AlmParams& params,
                       DecisionRule rule) {
  check_query(dict, y);
  if (family.rows() != dict.dim() || family.cols() != dict.size())
    fail(ErrorCode::DimensionMismatch, "ridge family does not match dictionary");
  const Eigen::VectorXd q = normalize_query(y);
  CodingResult coding = solve_alm_l1res(family, q, lambda, params);
  auto scores = collaborative_scores(dict, q, coding.alpha, &*coding.residual, rule);
  return finish(dict, std::move(scores), std::move(coding));
}

Decision classify_rcrc(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                       const AlmParams& params, DecisionRule rule) {
  check_query(dict, y);
  const auto family = RidgeFamilyCache::global().get(dict);
  return classify_rcrc(dict, *family, y, lambda, params, rule);
}

Decision classify_rns(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                      int p, const FistaParams& params) {
  check_query(dict, y);
  if (p != 1 && p != 2) fail(ErrorCode::BadParams, "RNS supports p = 1 or p = 2");
  const Eigen::VectorXd q = normalize_query(y);
  std::vector<double> scores;
  CodingResult stacked;
  stacked.alpha = Eigen::VectorXd::Zero(dict.size());
  stacked.converged = true;
  for (std::size_t k = 0; k < dict.num_classes(); ++k) {
    const Eigen::MatrixXd block = dict.block(k);
    CodingResult r = p == 2 ? solve_rls(block, q, lambda)
                            : solve_fista_l1(block, q, lambda, params);
    scores.push_back(r.objective);
    const auto& c = dict.classes()[k];
    stacked.alpha.segment(c.begin, c.size()) = r.alpha;
    stacked.iterations += r.iterations;
    stacked.converged = stacked.converged && r.converged;
  }
  stacked.objective = scores[argmin_class(scores)];
  return finish(dict, std::move(scores), std::move(stacked));
}

Decision classify_nn(const Dictionary& dict, const Eigen::VectorXd& y) {
  check_query(dict, y);
  const Eigen::VectorXd q = normalize_query(y);
  std::vector<double> scores;
  CodingResult coding;
  coding.alpha = Eigen::VectorXd::Zero(dict.size());
  coding.converged = true;
  Eigen::Index nearest = 0;
  double nearest_dist = kInf;
  for (std::size_t k = 0; k < dict.num_classes(); ++k) {
    const auto& c = dict.classes()[k];
    double best = kInf;
    for (Eigen::Index j = c.begin; j < c.end; ++j) {
      const double d = (q - dict.data().col(j)).norm();
      if (d < best) best = d;
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = j;
      }
    }
    scores.push_back(best);
  }
  coding.alpha[nearest] = 1.0;
  coding.objective = nearest_dist * nearest_dist;
  return finish(dict, std::move(scores), std::move(coding), false);
}

Decision classify_ns(const Dictionary& dict, const Eigen::VectorXd& y) {
  check_query(dict, y);
  const Eigen::VectorXd q = normalize_query(y);
  std::vector<double> scores;
  CodingResult coding;
  coding.alpha = Eigen::VectorXd::Zero(dict.size());
  coding.converged = true;
  for (std::size_t k = 0; k < dict.num_classes(); ++k) {
    const Eigen::MatrixXd block = dict.block(k);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd a = svd.solve(q);
    scores.push_back((q - block * a).norm());
    const auto& c = dict.classes()[k];
    coding.alpha.segment(c.begin, c.size()) = a;
  }
  coding.objective = scores[argmin_class(scores)];
  return finish(dict, std::move(scores), std::move(coding), false);
}

double compute_sci(const Dictionary& dict, const CodingResult& coding) {
  const std::size_t k = dict.num_classes();
  if (k < 2) fail(ErrorCode::SingleClass, "SCI is undefined for a single class");
  if (coding.alpha.size() != dict.size())
    fail(ErrorCode::DimensionMismatch, "coefficient length differs from dictionary size");
  const double total = coding.alpha.lpNorm<1>();
  if (total <= 1e-12) return 0.0;
  double top = 0.0;
  for (const auto& c : dict.classes())
    top = std::max(top, coding.alpha.segment(c.begin, c.size()).lpNorm<1>());
  const double kd = static_cast<double>(k);
  const double sci = (kd * top / total - 1.0) / (kd - 1.0);
  return std::clamp(sci, 0.0, 1.0);
}

ValidationOutcome validate(const Dictionary& dict, const CodingResult& coding,
                           double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    fail(ErrorCode::BadThreshold, "threshold must lie in [0, 1]");
  const double sci = compute_sci(dict, coding);
  return {sci >= threshold, sci, threshold};
}

}  // namespace collabrep
