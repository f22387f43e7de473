#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "collabrep/classifiers.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/degradation.hpp"
#include "collabrep/dictionary.hpp"
#include "collabrep/features.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

enum class ClassifierKind { Src, CrcRls, Rcrc, RnsL1, RnsL2, Nn, Ns };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);

// Where pixel-corruption replacement values come from.
enum class CorruptionRange {
  Fixed,  // DegradationSpec::value_min / value_max
  Train,  // min / max over the training features
};

struct ExperimentConfig {
  ClassifierKind classifier = ClassifierKind::CrcRls;
  std::optional<double> lambda;  // empty means auto: 0.001 * n / 700
  std::optional<Eigen::Index> feature_dim;
  std::optional<DegradationSpec> degradation;
  CorruptionRange corruption_range = CorruptionRange::Fixed;
  std::uint64_t seed = 0;
  AlmParams alm;
  FistaParams fista;
  DecisionRule decision_variant = DecisionRule::RegularizedResidual;
  int workers = 1;

  void validate() const;
};

// Parses the JSON config. Keys: classifier, lambda (number or "auto"),
// feature_dim, degradation, corruption_range ("fixed" | "train"), seed,
// alm, fista, decision_variant ("plain_residual" | "regularized_residual"),
// workers. "alm" is accepted only for rcrc and "fista" only for src, rns_l1
// and rns_l2.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

// Applies "a.b.c=value" overrides to a JSON object. The value is parsed as
// JSON when possible and kept as a string otherwise.
void apply_overrides(nlohmann::json& j, std::span<const std::string> overrides);

// Everything built offline from the training split.
struct Model {
  ExperimentConfig config;
  std::optional<PcaModel> pca;
  std::shared_ptr<const Dictionary> dictionary;
  std::optional<Projector> projector;             // crc_rls
  std::shared_ptr<const RidgeFamily> family;      // rcrc
  std::optional<double> spectral_norm_sq;         // src
  double lambda = 0.0;
  double train_min = 0.0;
  double train_max = 0.0;
};

Model build_model(const ExperimentConfig& config, const Dataset& train);

// A model directory holds model.json (config, lambda, training range),
// dictionary.{mat,json}, and when present dictionary.projector.{mat,json}
// and features.pca.{mat,json}. Solver caches for rcrc and src are rebuilt on
// load.
void save_model(const std::filesystem::path& dir, const Model& model);
Model load_model(const std::filesystem::path& dir);

// Maps a raw (ingested-resolution) column into the model's feature space.
Eigen::VectorXd model_features(const Model& model, const Eigen::VectorXd& raw);
Decision classify_features(const Model& model, const Eigen::VectorXd& features);

struct QueryRecord {
  std::size_t id = 0;
  Label truth;
  Label predicted;
  std::vector<double> residuals;
  std::optional<double> sci;
  double seconds = 0.0;
  bool degenerate = false;
};

struct Report {
  std::size_t correct = 0;
  std::size_t total = 0;
  double recognition_rate = 0.0;
  std::vector<Label> classes;           // dictionary class order
  std::vector<double> per_class_rates;  // NaN for classes without test queries
  // confusion[t][p]: queries of class t predicted as class p.
  std::vector<std::vector<std::size_t>> confusion;
  double mean_query_seconds = 0.0;
  double median_query_seconds = 0.0;
  double offline_seconds = 0.0;
  double lambda = 0.0;
  nlohmann::json config;
  nlohmann::json pipeline;
  nlohmann::json environment;
  std::vector<QueryRecord> queries;
};

// Trains on the train split and classifies every test column. Accuracy
// outputs depend only on (config, data); the worker count changes timings
// only.
Report run_experiment(const ExperimentConfig& config, const Dataset& data);

// Same, against a model built elsewhere; queries are the columns of `test`.
Report evaluate(const Model& model, const Dataset& test, double offline_seconds = 0.0);

nlohmann::json to_json(const Report& report, bool include_queries = false);
nlohmann::json to_json(const QueryRecord& record);
// One JSON object per line, in query order.
void write_query_log(std::ostream& out, const Report& report);
// Correct / total recounted from a query log.
std::pair<std::size_t, std::size_t> recount_query_log(std::istream& in);

std::vector<Report> lambda_sweep(const ExperimentConfig& config, const Dataset& data,
                                 std::span<const double> lambdas);
// "lambda,recognition_rate,correct,total" rows.
std::string sweep_csv(std::span<const Report> reports);

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // in threshold order
  double auc = 0.0;
  std::vector<double> customer_sci;
  std::vector<bool> customer_correct;
  std::vector<double> imposter_sci;
};

// Codes every customer and imposter query over the gallery and accepts a
// query when SCI >= threshold. TPR counts customers accepted and correctly
// identified; FPR counts accepted imposters. Throws OverlappingClasses when
// an imposter label is a gallery class.
RocCurve run_roc(const ExperimentConfig& config, const Dataset& gallery,
                 const Dataset& customers, const Dataset& imposters,
                 std::span<const double> thresholds);

// Trapezoidal area under the (FPR, TPR) points, anchored at (0, 0) and at
// FPR = 1 with the largest TPR.
double roc_auc(std::span<const RocPoint> points);
std::vector<double> default_roc_thresholds();
std::string roc_csv(const RocCurve& curve);
nlohmann::json to_json(const RocCurve& curve);

struct BenchRow {
  ExperimentConfig config;
  double recognition_rate = 0.0;
  bool rates_identical = true;  // across repetitions
  double offline_seconds = 0.0;       // mean over repetitions
  double mean_query_seconds = 0.0;    // over all repetitions' queries
  double median_query_seconds = 0.0;
  std::size_t queries = 0;  // per repetition
};

struct BenchTable {
  std::vector<BenchRow> rows;
  int repetitions = 0;
  // speedup[i][j] = mean_query_seconds of row j / that of row i.
  std::vector<std::vector<double>> speedup;
};

BenchTable bench(std::span<const ExperimentConfig> configs, const Dataset& data,
                 int repetitions);
nlohmann::json to_json(const BenchTable& table);

// Codes each test column of `data` over the training dictionary with
// (X^T X + lambda I)^{-1} X^T y after PCA to `feature_dim` (fit on the train
// split) and returns all coefficients pooled.
std::vector<double> pooled_coding_coefficients(const Dataset& data, Eigen::Index feature_dim,
                                               double lambda = 1e-4);

nlohmann::json environment_stamp();

}  // namespace collabrep
