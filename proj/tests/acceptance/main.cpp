// Acceptance suite: one PASS / FAIL / SKIP line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "collabrep/analysis.hpp"
#include "collabrep/classifiers.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/experiment.hpp"
#include "collabrep/rng.hpp"
#include "collabrep/solvers.hpp"

using namespace collabrep;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

// 1. Ridge coding against an extended-precision normal-equation solve.
Outcome solver_correctness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto m = static_cast<Eigen::Index>(5 + rng.below(46));
    const auto n = static_cast<Eigen::Index>(5 + rng.below(96));
    const double lambda = std::pow(10.0, rng.uniform(-6.0, 0.0));
    const Eigen::MatrixXd x = rng.normal_matrix(m, n);
    const Eigen::VectorXd y = rng.normal_vector(m);

    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const MatL xl = x.cast<long double>();
    MatL gram = xl.transpose() * xl;
    gram.diagonal().array() += static_cast<long double>(lambda);
    const VecL ref = gram.fullPivLu().solve(xl.transpose() * y.cast<long double>());

    const Eigen::VectorXd alpha = solve_rls(x, y, lambda).alpha;
    const double rel = static_cast<double>((alpha.cast<long double>() - ref).norm() / ref.norm());
    worst = std::max(worst, rel);
  }
  const double secs = elapsed(t0);
  return verdict(worst <= 1e-10 && secs < 10.0,
                 fmt("max relative error %.2e over 100 instances, %.2fs", worst, secs));
}

// 2. ALM optimality conditions and the scalar case.
Outcome alm_optimality() {
  Rng rng(202);
  double worst_feas = 0.0, worst_stat = 0.0, worst_box = 0.0, worst_sign = 0.0;
  bool ok = true;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd x = rng.normal_matrix(15, 30);
    const Eigen::VectorXd y = rng.normal_vector(15);
    const double lambda = rng.uniform(0.1, 1.0);
    const CodingResult r = solve_alm_l1res(x, y, lambda);
    const Eigen::VectorXd& e = *r.residual;
    const Eigen::VectorXd& z = *r.multiplier;

    const double feas = (y - x * r.alpha - e).norm() / y.norm();
    const double stat = (2.0 * lambda * r.alpha - x.transpose() * z).norm() /
                        (1.0 + r.alpha.norm());
    const double box = z.cwiseAbs().maxCoeff() - 1.0;
    double sign_gap = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      if (std::abs(e[i]) > 1e-6)
        sign_gap = std::max(sign_gap, std::abs(z[i] - (e[i] > 0 ? 1.0 : -1.0)));
    worst_feas = std::max(worst_feas, feas);
    worst_stat = std::max(worst_stat, stat);
    worst_box = std::max(worst_box, box);
    worst_sign = std::max(worst_sign, sign_gap);
    ok = ok && feas <= 1e-6 && stat <= 1e-4 && box <= 1e-4 && sign_gap <= 1e-3;
  }

  // Grid-search oracle for min |2 - a| + a^2.
  double best_a = 0.0, best_f = INFINITY;
  for (int i = 0; i <= 400000; ++i) {
    const double a = -1.0 + 4.0 * i / 400000.0;
    const double f = std::abs(2.0 - a) + a * a;
    if (f < best_f) best_f = f, best_a = a;
  }
  const CodingResult s = solve_alm_l1res(Eigen::MatrixXd::Ones(1, 1),
                                         Eigen::VectorXd::Constant(1, 2.0), 1.0);
  const double a = s.alpha[0], e = (*s.residual)[0];
  const bool scalar_ok = std::abs(a - best_a) <= 1e-4 && std::abs(e - (2.0 - best_a)) <= 1e-4;
  return verdict(ok && scalar_ok,
                 fmt("feasibility %.1e, stationarity %.1e, |z|-1 %.1e, sign gap %.1e; "
                     "scalar a=%.6f e=%.6f (oracle a=%.6f)",
                     worst_feas, worst_stat, worst_box, worst_sign, a, e, best_a));
}

// 3. Residual decomposition and the law-of-sines identity.
Outcome geometric_identities() {
  const auto t0 = Clock::now();
  Rng rng(303);
  double worst_dec = 0.0, worst_sin = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const int per = 2 + static_cast<int>(rng.below(4));
    const auto m = static_cast<Eigen::Index>(k * per + 5 + static_cast<int>(rng.below(30)));
    std::vector<Label> labels;
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < per; ++j) labels.push_back("k" + std::to_string(c));
    const Dictionary dict = Dictionary::from_matrix(rng.normal_matrix(m, k * per), labels);
    const Eigen::VectorXd y = rng.normal_vector(m);
    const Label target = "k" + std::to_string(rng.below(static_cast<std::uint64_t>(k)));
    const GeometryReport g = geometry_check(dict, y, target);
    worst_dec = std::max(worst_dec, std::abs(g.r_total_sq - g.r_perp_sq - g.r_star_sq) /
                                        g.r_total_sq);
    worst_sin = std::max(worst_sin, std::abs(g.sin_identity_lhs - g.sin_identity_rhs) /
                                        g.sin_identity_lhs);
  }
  const double secs = elapsed(t0);
  return verdict(worst_dec <= 1e-8 && worst_sin <= 1e-8 && secs < 5.0,
                 fmt("decomposition %.1e, sine identity %.1e (relative), %.2fs", worst_dec,
                     worst_sin, secs));
}

// 4. Soft thresholding and FISTA on identity dictionaries.
Outcome shrinkage_and_fista() {
  Rng rng(404);
  bool exact = true;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(40));
    Eigen::VectorXd x = rng.normal_vector(n) * rng.uniform(0.1, 5.0);
    if (t % 5 == 0) x[0] = 0.0;
    const double a = t % 7 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
    const Eigen::VectorXd s = shrink(x, a);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sign = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
      exact = exact && s[i] == sign * std::max(std::abs(x[i]) - a, 0.0);
    }
  }
  double worst = 0.0;
  int worst_iter = 0;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(40));
    const Eigen::VectorXd y = rng.normal_vector(n);
    const double lambda = rng.uniform(0.01, 2.0);
    // The objective-change rule is quadratic in the coefficient error, so
    // a 1e-6 coefficient match needs a tight tolerance.
    FistaParams p;
    p.tol = 1e-15;
    p.max_iter = 2000;
    const CodingResult r = solve_fista_l1(Eigen::MatrixXd::Identity(n, n), y, lambda, p);
    Eigen::VectorXd closed(n);
    for (Eigen::Index i = 0; i < n; ++i)
      closed[i] = (y[i] > 0 ? 1.0 : -1.0) * std::max(std::abs(y[i]) - lambda / 2.0, 0.0);
    worst = std::max(worst, (r.alpha - closed).cwiseAbs().maxCoeff());
    worst_iter = std::max(worst_iter, r.iterations);
  }
  return verdict(exact && worst <= 1e-6 && worst_iter <= 2000,
                 fmt("shrink exact: %s; FISTA max error %.1e, max iterations %d",
                     exact ? "yes" : "no", worst, worst_iter));
}

SyntheticSpec base_synthetic() {
  SyntheticSpec s;  // 20 classes, 5-dim subspaces in R^100, 20 / 10, sigma 0.05
  s.seed = 7;
  return s;
}

ExperimentConfig config_for(ClassifierKind kind) {
  ExperimentConfig c;
  c.classifier = kind;
  c.seed = 1;
  return c;
}

// 5. CRC-RLS against NN and S-SRC.
Outcome synthetic_ordering() {
  const auto t0 = Clock::now();
  const Dataset data = make_synthetic(base_synthetic());
  const double crc = run_experiment(config_for(ClassifierKind::CrcRls), data).recognition_rate;
  const double nn = run_experiment(config_for(ClassifierKind::Nn), data).recognition_rate;
  const double src = run_experiment(config_for(ClassifierKind::Src), data).recognition_rate;
  const double secs = elapsed(t0);
  return verdict(crc >= nn && std::abs(crc - src) <= 0.02 && secs < 60.0,
                 fmt("crc_rls %.3f, nn %.3f, src %.3f, %.1fs", crc, nn, src, secs));
}

// 6. R-CRC against CRC-RLS under pixel corruption.
Outcome robustness_ordering() {
  const auto t0 = Clock::now();
  const Dataset data = make_synthetic(base_synthetic());
  auto rate = [&](ClassifierKind kind, double fraction) {
    ExperimentConfig c = config_for(kind);
    if (kind == ClassifierKind::Rcrc) c.lambda = 100.0;
    DegradationSpec d;
    d.fraction = fraction;
    d.seed = 9;
    c.degradation = d;
    c.corruption_range = CorruptionRange::Train;
    return run_experiment(c, data).recognition_rate;
  };
  const double crc60 = rate(ClassifierKind::CrcRls, 0.6);
  const double rcrc60 = rate(ClassifierKind::Rcrc, 0.6);
  const double crc0 = rate(ClassifierKind::CrcRls, 0.0);
  const double rcrc0 = rate(ClassifierKind::Rcrc, 0.0);
  const double secs = elapsed(t0);
  return verdict(rcrc60 - crc60 >= 0.10 && std::abs(rcrc0 - crc0) <= 0.02 && secs < 300.0,
                 fmt("60%%: rcrc %.3f vs crc_rls %.3f; 0%%: rcrc %.3f vs crc_rls %.3f; %.1fs",
                     rcrc60, crc60, rcrc0, crc0, secs));
}

// 7. Per-query speed of CRC-RLS against S-SRC(FISTA).
Outcome speedup() {
  SyntheticSpec s;
  s.classes = 60;
  s.ambient_dim = 300;
  s.train_per_class = 20;  // n = 1200
  s.test_per_class = 10;   // 600 queries
  s.seed = 11;
  const Dataset data = make_synthetic(s);
  ExperimentConfig crc = config_for(ClassifierKind::CrcRls);
  ExperimentConfig src = config_for(ClassifierKind::Src);
  src.fista.tol = 1e-4;
  src.fista.max_iter = 300;
  const std::vector<ExperimentConfig> configs{crc, src};
  const BenchTable t = bench(configs, data, 3);
  const auto& a = t.rows[0];
  const auto& b = t.rows[1];
  const double ratio = t.speedup[0][1];
  return verdict(ratio >= 10.0 && std::abs(a.recognition_rate - b.recognition_rate) <= 0.02 &&
                     a.queries >= 500,
                 fmt("crc_rls %.2e s/query (%.3f), src %.2e s/query (%.3f), speed-up %.1fx "
                     "over %zu queries x %d",
                     a.mean_query_seconds, a.recognition_rate, b.mean_query_seconds,
                     b.recognition_rate, ratio, a.queries, t.repetitions));
}

// 8. Laplacian fit improves with feature dimension.
Outcome distribution_trend() {
  SyntheticSpec s;
  s.classes = 40;
  s.ambient_dim = 600;
  s.subspace_dim = 20;
  s.train_per_class = 15;
  s.test_per_class = 5;
  s.seed = 5;
  const Dataset data = make_synthetic(s);
  const FitReport low = coef_distribution_fit(pooled_coding_coefficients(data, 25));
  const FitReport high = coef_distribution_fit(pooled_coding_coefficients(data, 400));
  return verdict(high.kl_laplacian < low.kl_laplacian && high.kl_laplacian < high.kl_gaussian,
                 fmt("kl_laplacian %.4f (dim 25) -> %.4f (dim 400); kl_gaussian %.4f (dim 400)",
                     low.kl_laplacian, high.kl_laplacian, high.kl_gaussian));
}

// 9. Accuracy peaks at intermediate lambda.
Outcome lambda_sweep_shape() {
  SyntheticSpec s;
  s.overlap = 0.5;
  s.noise = 0.1;
  s.train_per_class = 5;  // n = m: the unregularized system is ill-posed
  s.seed = 7;
  const Dataset data = make_synthetic(s);
  const std::vector<double> lambdas{1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0};
  const auto reports = lambda_sweep(config_for(ClassifierKind::CrcRls), data, lambdas);
  double best_mid = 0.0;
  std::string rates;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    rates += fmt("%s%g:%.3f", i ? " " : "", lambdas[i], reports[i].recognition_rate);
    if (i > 0 && i + 1 < reports.size())
      best_mid = std::max(best_mid, reports[i].recognition_rate);
  }
  return verdict(best_mid > reports.front().recognition_rate &&
                     best_mid > reports.back().recognition_rate,
                 rates);
}

// 10. SCI validation ROC with held-out imposter classes.
Outcome validation_roc() {
  SyntheticSpec s = base_synthetic();
  s.imposter_classes = 4;
  const Dataset data = make_synthetic(s);
  std::vector<Label> imposter_labels;
  for (const auto& l : data.classes())
    if (l.rfind("imp", 0) == 0) imposter_labels.push_back(l);
  const Dataset known = data.filter_labels(imposter_labels, false);
  const Dataset imposters = data.filter_labels(imposter_labels, true).select(Split::Test);
  const RocCurve roc =
      run_roc(config_for(ClassifierKind::CrcRls), known.select(Split::Train),
              known.select(Split::Test), imposters, default_roc_thresholds());
  bool monotone = true, bounded = true;
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const auto& p = roc.points[i];
    bounded = bounded && p.fpr >= 0 && p.fpr <= 1 && p.tpr >= 0 && p.tpr <= 1;
    if (i > 0) monotone = monotone && p.fpr <= roc.points[i - 1].fpr;
  }
  return verdict(monotone && bounded && roc.auc > 0.5,
                 fmt("FPR nonincreasing: %s, AUC %.3f over %zu customers / %zu imposters",
                     monotone ? "yes" : "no", roc.auc, roc.customer_sci.size(),
                     roc.imposter_sci.size()));
}

// 11. Bit-identical accuracy outputs on re-runs.
Outcome determinism() {
  bool same = true;
  std::size_t runs = 0;
  for (auto kind : {ClassifierKind::CrcRls, ClassifierKind::Rcrc, ClassifierKind::Src}) {
    ExperimentConfig c = config_for(kind);
    DegradationSpec d;
    d.fraction = 0.3;
    d.seed = 4;
    c.degradation = d;
    c.corruption_range = CorruptionRange::Train;
    c.feature_dim = 60;
    const Report a = run_experiment(c, make_synthetic(base_synthetic()));
    c.workers = 3;
    const Report b = run_experiment(c, make_synthetic(base_synthetic()));
    same = same && a.recognition_rate == b.recognition_rate && a.confusion == b.confusion;
    for (std::size_t q = 0; q < a.queries.size(); ++q)
      same = same && a.queries[q].residuals == b.queries[q].residuals &&
             a.queries[q].predicted == b.queries[q].predicted;
    runs += 2;
  }
  return verdict(same, fmt("%zu runs (1 and 3 workers), outputs %s", runs,
                           same ? "bit-identical" : "differ"));
}

// 12. Extended Yale B, when supplied as class directories of PGM images.
Outcome yale_b() {
  const char* root = std::getenv("COLLABREP_EYALEB_DIR");
  if (!root || !*root)
    return {Status::Skip, "set COLLABREP_EYALEB_DIR to a class-directory copy of the data"};
  if (!std::filesystem::is_directory(root))
    return {Status::Skip, std::string("no directory at ") + root};
  IngestOptions opt;
  opt.train_per_class = 32;
  opt.seed = 2011;
  const Dataset data = ingest_dataset(root, Layout::ClassDirs, opt);
  ExperimentConfig c = config_for(ClassifierKind::CrcRls);
  c.feature_dim = 300;
  const Report r = run_experiment(c, data);
  return verdict(std::abs(r.recognition_rate - 0.979) <= 0.015,
                 fmt("crc_rls %.4f over %zu queries (target 0.979 +/- 0.015)",
                     r.recognition_rate, r.total));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver correctness", solver_correctness},
      {"ALM optimality", alm_optimality},
      {"geometric identities", geometric_identities},
      {"shrinkage and FISTA", shrinkage_and_fista},
      {"synthetic classification ordering", synthetic_ordering},
      {"robustness ordering", robustness_ordering},
      {"speed-up", speedup},
      {"distribution-fit trend", distribution_trend},
      {"lambda-sweep shape", lambda_sweep_shape},
      {"validation ROC", validation_roc},
      {"determinism", determinism},
      {"dataset-gated Extended Yale B", yale_b},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("%s %2zu %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Status::Fail;
  }
  return failures == 0 ? 0 : 1;
}
