#include "collabrep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "collabrep/errors.hpp"
#include "collabrep/matrix_io.hpp"
#include "collabrep/rng.hpp"

namespace collabrep {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const char* rule_name(DecisionRule r) {
  return r == DecisionRule::PlainResidual ? "plain_residual" : "regularized_residual";
}

bool uses_fista(ClassifierKind k) {
  return k == ClassifierKind::Src || k == ClassifierKind::RnsL1 || k == ClassifierKind::RnsL2;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Runs fn(i) for i in [0, count) on `workers` threads. Each index writes
// only its own slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

DegradationSpec effective_degradation(const Model& model) {
  DegradationSpec spec = *model.config.degradation;
  spec.seed = derive_seed(model.config.seed, spec.seed);
  if (model.config.corruption_range == CorruptionRange::Train &&
      spec.kind == DegradationKind::PixelCorruption) {
    spec.value_min = model.train_min;
    spec.value_max = model.train_max;
  }
  return spec;
}

nlohmann::json alm_json(const AlmParams& p) {
  return {{"mu0", p.mu0}, {"rho", p.rho}, {"mu_max", p.mu_max}, {"tol", p.tol},
          {"max_iter", p.max_iter}};
}

nlohmann::json fista_json(const FistaParams& p) {
  return {{"tol", p.tol}, {"max_iter", p.max_iter}};
}

nlohmann::json nan_to_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Src: return "src";
    case ClassifierKind::CrcRls: return "crc_rls";
    case ClassifierKind::Rcrc: return "rcrc";
    case ClassifierKind::RnsL1: return "rns_l1";
    case ClassifierKind::RnsL2: return "rns_l2";
    case ClassifierKind::Nn: return "nn";
    case ClassifierKind::Ns: return "ns";
  }
  return "unknown";
}

ClassifierKind parse_classifier(std::string_view name) {
  for (auto k : {ClassifierKind::Src, ClassifierKind::CrcRls, ClassifierKind::Rcrc,
                 ClassifierKind::RnsL1, ClassifierKind::RnsL2, ClassifierKind::Nn,
                 ClassifierKind::Ns})
    if (to_string(k) == name) return k;
  fail(ErrorCode::ConfigInvalid, "unknown classifier '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (lambda && !(*lambda > 0.0))
    fail(ErrorCode::NonPositiveLambda, "lambda must be positive");
  if (feature_dim && *feature_dim < 1)
    fail(ErrorCode::ConfigInvalid, "feature_dim must be positive");
  if (degradation) degradation->validate();
  if (workers < 1) fail(ErrorCode::ConfigInvalid, "workers must be at least 1");
  alm.validate();
  fista.validate();
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigInvalid, "config must be a JSON object");
  static const std::set<std::string> known = {
      "classifier", "lambda", "feature_dim", "degradation", "corruption_range", "seed",
      "alm", "fista", "decision_variant", "workers"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) fail(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");

  ExperimentConfig c;
  try {
    c.classifier = parse_classifier(j.value("classifier", std::string("crc_rls")));
    if (j.contains("lambda") && !j["lambda"].is_null()) {
      const auto& l = j["lambda"];
      if (l.is_string()) {
        if (l.get<std::string>() != "auto")
          fail(ErrorCode::ConfigInvalid, "lambda must be a number or \"auto\"");
      } else {
        c.lambda = l.get<double>();
      }
    }
    if (j.contains("feature_dim") && !j["feature_dim"].is_null())
      c.feature_dim = j["feature_dim"].get<Eigen::Index>();
    if (j.contains("degradation") && !j["degradation"].is_null())
      c.degradation = degradation_from_json(j["degradation"]);
    const auto range = j.value("corruption_range", std::string("fixed"));
    if (range == "train") {
      c.corruption_range = CorruptionRange::Train;
    } else if (range != "fixed") {
      fail(ErrorCode::ConfigInvalid, "corruption_range must be \"fixed\" or \"train\"");
    }
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("alm")) {
      if (c.classifier != ClassifierKind::Rcrc)
        fail(ErrorCode::ConfigInvalid, "alm parameters apply to rcrc only");
      const auto& a = j["alm"];
      c.alm.mu0 = a.value("mu0", c.alm.mu0);
      c.alm.rho = a.value("rho", c.alm.rho);
      c.alm.mu_max = a.value("mu_max", c.alm.mu_max);
      c.alm.tol = a.value("tol", c.alm.tol);
      c.alm.max_iter = a.value("max_iter", c.alm.max_iter);
    }
    if (j.contains("fista")) {
      if (!uses_fista(c.classifier))
        fail(ErrorCode::ConfigInvalid, "fista parameters apply to src, rns_l1 and rns_l2 only");
      const auto& f = j["fista"];
      c.fista.tol = f.value("tol", c.fista.tol);
      c.fista.max_iter = f.value("max_iter", c.fista.max_iter);
    }
    const auto rule = j.value("decision_variant", std::string("regularized_residual"));
    if (rule == "plain_residual") {
      c.decision_variant = DecisionRule::PlainResidual;
    } else if (rule != "regularized_residual") {
      fail(ErrorCode::ConfigInvalid,
           "decision_variant must be plain_residual or regularized_residual");
    }
    c.workers = j.value("workers", 1);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["classifier"] = to_string(c.classifier);
  j["lambda"] = c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json("auto");
  j["feature_dim"] = c.feature_dim ? nlohmann::json(*c.feature_dim) : nlohmann::json(nullptr);
  j["degradation"] = c.degradation ? to_json(*c.degradation) : nlohmann::json(nullptr);
  j["corruption_range"] = c.corruption_range == CorruptionRange::Train ? "train" : "fixed";
  j["seed"] = c.seed;
  if (c.classifier == ClassifierKind::Rcrc) j["alm"] = alm_json(c.alm);
  if (uses_fista(c.classifier)) j["fista"] = fista_json(c.fista);
  j["decision_variant"] = rule_name(c.decision_variant);
  j["workers"] = c.workers;
  return j;
}

void apply_overrides(nlohmann::json& j, std::span<const std::string> overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorCode::ConfigInvalid, "override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (part.empty()) fail(ErrorCode::ConfigInvalid, "bad override key '" + key + "'");
      if (!node->is_object()) *node = nlohmann::json::object();
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

Model build_model(const ExperimentConfig& config, const Dataset& train) {
  config.validate();
  if (train.size() == 0) fail(ErrorCode::EmptyInput, "no training samples");
  Model model;
  model.config = config;
  model.train_min = train.features.minCoeff();
  model.train_max = train.features.maxCoeff();

  Eigen::MatrixXd feats = train.features;
  if (config.feature_dim) {
    model.pca = fit_pca(train.features, *config.feature_dim);
    feats = project_pca(*model.pca, train.features);
  }
  model.dictionary = std::make_shared<const Dictionary>(
      Dictionary::from_matrix(feats, train.labels));
  const Dictionary& dict = *model.dictionary;
  model.lambda = config.lambda.value_or(default_lambda(dict.size()));

  switch (config.classifier) {
    case ClassifierKind::CrcRls:
      model.projector = config.lambda ? build_projector(dict, *config.lambda)
                                      : build_default_projector(dict);
      break;
    case ClassifierKind::Rcrc:
      model.family = std::make_shared<const RidgeFamily>(dict.data());
      break;
    case ClassifierKind::Src:
      model.spectral_norm_sq = spectral_norm_sq(dict.data());
      break;
    default:
      break;
  }
  return model;
}

void save_model(const std::filesystem::path& dir, const Model& model) {
  std::filesystem::create_directories(dir);
  save_dictionary(dir / "dictionary", *model.dictionary);
  if (model.projector) save_projector(dir / "dictionary", *model.projector);
  if (model.pca) save_pca(dir / "features", *model.pca);
  nlohmann::json j;
  j["format"] = "collabrep.model/1";
  j["config"] = to_json(model.config);
  if (model.config.degradation && model.config.degradation->occluder) {
    // The occluder image is not part of the config echo; keep it beside it.
    save_matrix(dir / "occluder.mat", *model.config.degradation->occluder);
    j["config"]["degradation"]["occluder_path"] = "occluder.mat";
  }
  j["lambda"] = model.lambda;
  j["train_range"] = {model.train_min, model.train_max};
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& dir) {
  const auto meta_path = dir / "model.json";
  if (!std::filesystem::exists(meta_path))
    fail(ErrorCode::MissingPath, "no model at " + dir.string());
  std::ifstream in(meta_path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("config"))
    fail(ErrorCode::ConfigInvalid, meta_path.string() + " is not a model file");

  nlohmann::json cfg = j["config"];
  if (cfg.contains("degradation") && cfg["degradation"].is_object()) {
    auto& d = cfg["degradation"];
    d.erase("occluder_shape");
    if (d.contains("occluder_path"))
      d["occluder_path"] = (dir / d["occluder_path"].get<std::string>()).string();
  }
  Model model;
  model.config = config_from_json(cfg);
  model.lambda = j.value("lambda", 0.0);
  if (j.contains("train_range")) {
    model.train_min = j["train_range"].at(0).get<double>();
    model.train_max = j["train_range"].at(1).get<double>();
  }
  model.dictionary = std::make_shared<const Dictionary>(load_dictionary(dir / "dictionary"));
  if (std::filesystem::exists(dir / "features.pca.json")) model.pca = load_pca(dir / "features");
  const Dictionary& dict = *model.dictionary;
  switch (model.config.classifier) {
    case ClassifierKind::CrcRls:
      model.projector = load_projector(dir / "dictionary");
      if (model.projector->fingerprint() != dict.fingerprint())
        fail(ErrorCode::FingerprintMismatch, "stored projector does not match the dictionary");
      break;
    case ClassifierKind::Rcrc:
      model.family = std::make_shared<const RidgeFamily>(dict.data());
      break;
    case ClassifierKind::Src:
      model.spectral_norm_sq = spectral_norm_sq(dict.data());
      break;
    default:
      break;
  }
  return model;
}

Eigen::VectorXd model_features(const Model& model, const Eigen::VectorXd& raw) {
  return model.pca ? project_pca(*model.pca, raw) : raw;
}

Decision classify_features(const Model& model, const Eigen::VectorXd& y) {
  const Dictionary& dict = *model.dictionary;
  const auto& c = model.config;
  switch (c.classifier) {
    case ClassifierKind::Src:
      return classify_src(dict, y, model.lambda, c.fista, model.spectral_norm_sq);
    case ClassifierKind::CrcRls:
      return classify_crc_rls(*model.projector, dict, y, c.decision_variant);
    case ClassifierKind::Rcrc:
      return classify_rcrc(dict, *model.family, y, model.lambda, c.alm, c.decision_variant);
    case ClassifierKind::RnsL1:
      return classify_rns(dict, y, model.lambda, 1, c.fista);
    case ClassifierKind::RnsL2:
      return classify_rns(dict, y, model.lambda, 2, c.fista);
    case ClassifierKind::Nn:
      return classify_nn(dict, y);
    case ClassifierKind::Ns:
      return classify_ns(dict, y);
  }
  fail(ErrorCode::ConfigInvalid, "unknown classifier");
}

Report evaluate(const Model& model, const Dataset& test, double offline_seconds) {
  const Dictionary& dict = *model.dictionary;
  const auto n_queries = static_cast<std::size_t>(test.size());
  const bool degrade = model.config.degradation.has_value();
  const DegradationSpec spec = degrade ? effective_degradation(model) : DegradationSpec{};
  const Eigen::Index rows = test.image_rows > 0 ? test.image_rows : test.dim();
  const Eigen::Index cols = test.image_rows > 0 ? test.image_cols : 1;

  std::vector<QueryRecord> records(n_queries);
  parallel_for(n_queries, model.config.workers, [&](std::size_t q) {
    Eigen::VectorXd raw = test.features.col(static_cast<Eigen::Index>(q));
    if (degrade) {
      const Eigen::MatrixXd image = reshape_image(raw, rows, cols);
      raw = vectorize_image(apply_degradation(image, spec, q));
    }
    const auto start = Clock::now();
    const Decision d = classify_features(model, model_features(model, raw));
    QueryRecord& r = records[q];
    r.seconds = seconds_since(start);
    r.id = q;
    r.truth = test.labels[q];
    r.predicted = d.predicted;
    r.residuals = d.residuals;
    r.sci = d.sci;
    r.degenerate = d.degenerate;
  });

  Report rep;
  rep.total = n_queries;
  const std::size_t k = dict.num_classes();
  for (const auto& c : dict.classes()) rep.classes.push_back(c.label);
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<std::size_t> class_total(k, 0), class_correct(k, 0);
  std::vector<double> times;
  times.reserve(n_queries);
  for (const auto& r : records) {
    times.push_back(r.seconds);
    const bool ok = r.predicted == r.truth;
    rep.correct += ok ? 1 : 0;
    if (auto t = dict.find_class(r.truth)) {
      ++class_total[*t];
      class_correct[*t] += ok ? 1 : 0;
      ++rep.confusion[*t][dict.class_index(r.predicted)];
    }
  }
  rep.recognition_rate =
      rep.total ? static_cast<double>(rep.correct) / static_cast<double>(rep.total) : 0.0;
  for (std::size_t i = 0; i < k; ++i)
    rep.per_class_rates.push_back(class_total[i] ? static_cast<double>(class_correct[i]) /
                                                       static_cast<double>(class_total[i])
                                                 : std::numeric_limits<double>::quiet_NaN());
  rep.mean_query_seconds = mean(times);
  rep.median_query_seconds = median(times);
  rep.offline_seconds = offline_seconds;
  rep.lambda = model.lambda;
  rep.config = to_json(model.config);
  rep.pipeline = {
      {"pca", model.pca ? nlohmann::json{{"dim", model.pca->dim()},
                                         {"fit_on", "raw training columns"},
                                         {"sign_convention", kPcaSignConvention}}
                        : nlohmann::json(nullptr)},
      {"degradation_applied_at", "ingested resolution, before feature projection"},
      {"query_normalization", "unit l2 norm"},
      {"dictionary_columns", dict.size()},
      {"dictionary_fingerprint", fingerprint_hex(dict.fingerprint())},
      {"query_timing", "feature projection and classification; degradation excluded"}};
  if (degrade) rep.pipeline["degradation"] = to_json(spec);
  rep.environment = environment_stamp();
  rep.queries = std::move(records);
  return rep;
}

Report run_experiment(const ExperimentConfig& config, const Dataset& data) {
  data.validate();
  const Dataset train = data.select(Split::Train);
  const Dataset test = data.select(Split::Test);
  if (test.size() == 0) fail(ErrorCode::EmptyInput, "no test samples");
  const auto start = Clock::now();
  const Model model = build_model(config, train);
  const double offline = seconds_since(start);
  Report rep = evaluate(model, test, offline);
  rep.pipeline["dataset"] = data.provenance;
  return rep;
}

nlohmann::json to_json(const QueryRecord& r) {
  nlohmann::json j;
  j["query_id"] = r.id;
  j["true_class"] = r.truth;
  j["predicted_class"] = r.predicted;
  auto& res = j["residuals"] = nlohmann::json::array();
  for (double v : r.residuals) res.push_back(nan_to_null(v));
  j["sci"] = r.sci ? nlohmann::json(*r.sci) : nlohmann::json(nullptr);
  j["wall_time"] = r.seconds;
  if (r.degenerate) j["degenerate"] = true;
  return j;
}

nlohmann::json to_json(const Report& r, bool include_queries) {
  nlohmann::json j;
  j["recognition_rate"] = r.recognition_rate;
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["lambda"] = r.lambda;
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t i = 0; i < r.classes.size(); ++i)
    per_class[r.classes[i]] = nan_to_null(r.per_class_rates[i]);
  j["per_class_rates"] = per_class;

  nlohmann::json confusions = nlohmann::json::array();
  for (std::size_t t = 0; t < r.confusion.size(); ++t)
    for (std::size_t p = 0; p < r.confusion[t].size(); ++p)
      if (t != p && r.confusion[t][p] > 0)
        confusions.push_back({{"true", r.classes[t]}, {"predicted", r.classes[p]},
                              {"count", r.confusion[t][p]}});
  j["confusion"] = {{"classes", r.classes}, {"matrix", r.confusion},
                    {"off_diagonal", confusions}};
  j["timing"] = {{"mean_query_seconds", r.mean_query_seconds},
                 {"median_query_seconds", r.median_query_seconds},
                 {"offline_seconds", r.offline_seconds}};
  j["config"] = r.config;
  j["pipeline"] = r.pipeline;
  j["environment"] = r.environment;
  if (include_queries) {
    auto& qs = j["queries"] = nlohmann::json::array();
    for (const auto& q : r.queries) qs.push_back(to_json(q));
  }
  return j;
}

void write_query_log(std::ostream& out, const Report& report) {
  for (const auto& q : report.queries) out << to_json(q).dump() << '\n';
}

std::pair<std::size_t, std::size_t> recount_query_log(std::istream& in) {
  std::size_t correct = 0, total = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("true_class") || !j.contains("predicted_class"))
      fail(ErrorCode::MalformedMatrix, "bad query log line");
    ++total;
    correct += j["true_class"] == j["predicted_class"] ? 1 : 0;
  }
  return {correct, total};
}

std::vector<Report> lambda_sweep(const ExperimentConfig& config, const Dataset& data,
                                 std::span<const double> lambdas) {
  if (lambdas.empty()) fail(ErrorCode::ConfigInvalid, "lambda list is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) fail(ErrorCode::NonPositiveLambda, "lambdas must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      fail(ErrorCode::ConfigInvalid, "lambdas must be sorted ascending");
  }
  std::vector<Report> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    ExperimentConfig c = config;
    c.lambda = l;
    out.push_back(run_experiment(c, data));
  }
  return out;
}

std::string sweep_csv(std::span<const Report> reports) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda,recognition_rate,correct,total\n";
  for (const auto& r : reports)
    os << r.lambda << ',' << r.recognition_rate << ',' << r.correct << ',' << r.total << '\n';
  return os.str();
}

RocCurve run_roc(const ExperimentConfig& config, const Dataset& gallery,
                 const Dataset& customers, const Dataset& imposters,
                 std::span<const double> thresholds) {
  if (config.classifier == ClassifierKind::Nn || config.classifier == ClassifierKind::Ns)
    fail(ErrorCode::ConfigInvalid, "SCI needs a coding vector; nn and ns have none");
  const auto gallery_classes = gallery.classes();
  const std::set<Label> known(gallery_classes.begin(), gallery_classes.end());
  for (const auto& l : imposters.labels)
    if (known.contains(l))
      fail(ErrorCode::OverlappingClasses, "imposter class '" + l + "' is in the gallery");
  for (const auto& l : customers.labels)
    if (!known.contains(l))
      fail(ErrorCode::ConfigInvalid, "customer class '" + l + "' is not in the gallery");
  if (thresholds.empty()) fail(ErrorCode::BadThreshold, "no thresholds");

  const Model model = build_model(config, gallery);
  RocCurve curve;
  const Report cust = evaluate(model, customers);
  const Report imp = evaluate(model, imposters);
  for (const auto& q : cust.queries) {
    curve.customer_sci.push_back(q.sci.value_or(0.0));
    curve.customer_correct.push_back(q.predicted == q.truth);
  }
  for (const auto& q : imp.queries) curve.imposter_sci.push_back(q.sci.value_or(0.0));

  for (double t : thresholds) {
    if (std::isnan(t)) fail(ErrorCode::BadThreshold, "threshold is NaN");
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < curve.customer_sci.size(); ++i)
      tp += curve.customer_sci[i] >= t && curve.customer_correct[i] ? 1 : 0;
    for (double s : curve.imposter_sci) fp += s >= t ? 1 : 0;
    RocPoint p;
    p.threshold = t;
    p.tpr = curve.customer_sci.empty()
                ? 0.0
                : static_cast<double>(tp) / static_cast<double>(curve.customer_sci.size());
    p.fpr = curve.imposter_sci.empty()
                ? 0.0
                : static_cast<double>(fp) / static_cast<double>(curve.imposter_sci.size());
    curve.points.push_back(p);
  }
  curve.auc = roc_auc(curve.points);
  return curve;
}

double roc_auc(std::span<const RocPoint> points) {
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double top = 0.0;
  for (const auto& p : points) {
    pts.emplace_back(p.fpr, p.tpr);
    top = std::max(top, p.tpr);
  }
  pts.emplace_back(1.0, top);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
  return area;
}

std::vector<double> default_roc_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(i / 100.0);
  t.push_back(std::nextafter(1.0, 2.0));
  return t;
}

std::string roc_csv(const RocCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "threshold,tpr,fpr\n";
  for (const auto& p : curve.points) os << p.threshold << ',' << p.tpr << ',' << p.fpr << '\n';
  return os.str();
}

nlohmann::json to_json(const RocCurve& curve) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : curve.points)
    pts.push_back({{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}});
  return {{"points", pts},
          {"auc", curve.auc},
          {"customers", curve.customer_sci.size()},
          {"imposters", curve.imposter_sci.size()}};
}

BenchTable bench(std::span<const ExperimentConfig> configs, const Dataset& data,
                 int repetitions) {
  if (repetitions < 3) fail(ErrorCode::ConfigInvalid, "bench needs at least 3 repetitions");
  if (configs.empty()) fail(ErrorCode::ConfigInvalid, "bench needs at least one config");
  BenchTable table;
  table.repetitions = repetitions;
  for (const auto& config : configs) {
    BenchRow row;
    row.config = config;
    std::vector<double> times, offline;
    for (int rep = 0; rep < repetitions; ++rep) {
      const Report r = run_experiment(config, data);
      if (rep == 0) {
        row.recognition_rate = r.recognition_rate;
      } else if (r.recognition_rate != row.recognition_rate) {
        row.rates_identical = false;
      }
      offline.push_back(r.offline_seconds);
      for (const auto& q : r.queries) times.push_back(q.seconds);
    }
    row.offline_seconds = mean(offline);
    row.mean_query_seconds = mean(times);
    row.median_query_seconds = median(times);
    row.queries = times.size() / static_cast<std::size_t>(repetitions);
    table.rows.push_back(row);
  }
  const std::size_t n = table.rows.size();
  table.speedup.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      table.speedup[i][j] = table.rows[j].mean_query_seconds / table.rows[i].mean_query_seconds;
  return table;
}

nlohmann::json to_json(const BenchTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"config", to_json(r.config)},
                    {"recognition_rate", r.recognition_rate},
                    {"rates_identical", r.rates_identical},
                    {"offline_seconds", r.offline_seconds},
                    {"mean_query_seconds", r.mean_query_seconds},
                    {"median_query_seconds", r.median_query_seconds},
                    {"queries_per_repetition", r.queries}});
  return {{"repetitions", table.repetitions},
          {"rows", rows},
          {"speedup", table.speedup},
          {"environment", environment_stamp()}};
}

std::vector<double> pooled_coding_coefficients(const Dataset& data, Eigen::Index feature_dim,
                                               double lambda) {
  const Dataset train = data.select(Split::Train);
  const Dataset test = data.select(Split::Test);
  if (test.size() == 0) fail(ErrorCode::EmptyInput, "no test samples");
  const PcaModel pca = fit_pca(train.features, feature_dim);
  const Dictionary dict = Dictionary::from_matrix(project_pca(pca, train.features), train.labels);
  const Projector projector = build_projector(dict, lambda);
  std::vector<double> coefs;
  coefs.reserve(static_cast<std::size_t>(test.size() * dict.size()));
  for (Eigen::Index q = 0; q < test.size(); ++q) {
    const Eigen::VectorXd y =
        normalize_query(project_pca(pca, Eigen::VectorXd(test.features.col(q))));
    const Eigen::VectorXd a = projector.apply(y);
    coefs.insert(coefs.end(), a.data(), a.data() + a.size());
  }
  return coefs;
}

nlohmann::json environment_stamp() {
  const std::time_t now = std::time(nullptr);
  char stamp[32] = {};
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
#if defined(__clang__)
  const std::string compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = "gcc " __VERSION__;
#else
  const std::string compiler = "unknown";
#endif
  return {{"library", "collabrep 0.1.0"},
          {"compiler", compiler},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"hardware_threads", std::thread::hardware_concurrency()},
          {"timestamp_utc", stamp}};
}

}  // namespace collabrep
