#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "collabrep/dictionary.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

// Per-class score used by CRC-RLS and R-CRC.
enum class DecisionRule {
  // ||y - X_i a_i|| (minus e for R-CRC)
  PlainResidual,
  // ||y - X_i a_i|| / ||a_i||; a class with ||a_i|| < 1e-12 scores +inf
  RegularizedResidual,
};

struct Decision {
  Label predicted;
  std::size_t predicted_index = 0;
  // One score per class, in dictionary class order.
  std::vector<double> residuals;
  // Filled by the coding classifiers (not nn or ns) when K >= 2.
  std::optional<double> sci;
  CodingResult coding;
  // Set when no class produced a finite score (e.g. an all-zero query).
  bool degenerate = false;
};

struct ValidationOutcome {
  bool accepted = false;
  double sci = 0.0;
  double threshold = 0.0;
};

// Queries are scaled to unit l2 norm before coding (a zero query is left as
// is), so every rule below returns the same class for y and c*y, c > 0.
Eigen::VectorXd normalize_query(const Eigen::VectorXd& y);

// argmin over scores; ties and all-infinite scores resolve to the earliest
// class.
std::size_t argmin_class(const std::vector<double>& scores);

Decision classify_src(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                      const FistaParams& params = {},
                      std::optional<double> norm_sq = std::nullopt);

Decision classify_crc_rls(const Projector& projector, const Dictionary& dict,
                          const Eigen::VectorXd& y,
                          DecisionRule rule = DecisionRule::RegularizedResidual);

Decision classify_rcrc(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                       const AlmParams& params = {},
                       DecisionRule rule = DecisionRule::RegularizedResidual);
Decision classify_rcrc(const Dictionary& dict, const RidgeFamily& family,
                       const Eigen::VectorXd& y, double lambda,
                       const AlmParams& params = {},
                       DecisionRule rule = DecisionRule::RegularizedResidual);

// Regularized nearest subspace; p is 1 or 2.
Decision classify_rns(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                      int p, const FistaParams& params = {});

Decision classify_nn(const Dictionary& dict, const Eigen::VectorXd& y);

// Nearest subspace: per-class least squares through a pseudoinverse with
// singular-value cutoff 1e-10 * s_max.
Decision classify_ns(const Dictionary& dict, const Eigen::VectorXd& y);

// (K * max_i ||a_i||_1 / ||a||_1 - 1) / (K - 1), clamped to [0, 1];
// 0 when ||a||_1 <= 1e-12. Throws SingleClass for K = 1.
double compute_sci(const Dictionary& dict, const CodingResult& coding);

ValidationOutcome validate(const Dictionary& dict, const CodingResult& coding,
                           double threshold);

}  // namespace collabrep
