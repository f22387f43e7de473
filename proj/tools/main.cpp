#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "collabrep/analysis.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/errors.hpp"
#include "collabrep/experiment.hpp"
#include "collabrep/matrix_io.hpp"
#include "collabrep/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace collabrep;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingPath, "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigInvalid, path + " is not valid JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << text;
}

void emit(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Loads a config file (or {}) and applies overrides; `seed` wins over the
// file when given.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets,
                             std::optional<std::uint64_t> seed) {
  json j = path.empty() ? json::object() : read_json(path);
  apply_overrides(j, sets);
  if (seed) j["seed"] = *seed;
  ExperimentConfig c = config_from_json(j);
  if (c.degradation && !seed && !j.contains("seed"))
    fail(ErrorCode::ConfigInvalid, "degradation is randomized: pass --seed");
  return c;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::vector<Label> parse_labels(const std::string& text) {
  std::vector<Label> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_log(const std::string& path, const Report& r) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  write_query_log(out, r);
}

int report_error(const std::string& code, const std::string& message, int status) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative representation classification toolkit"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read a dataset or generate a synthetic one");
  std::string in_path, layout = "class_dirs", synthetic_cfg, out_prefix;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> train_per_class;
  bool synthetic = false;
  ingest->add_option("path", in_path, "Class directory root or matrix file");
  ingest->add_option("--layout", layout, "class_dirs or matrix_file")
      ->check(CLI::IsMember({"class_dirs", "matrix_file"}));
  ingest->add_flag("--synthetic", synthetic, "Generate subspace data instead of reading");
  ingest->add_option("--config", synthetic_cfg, "Synthetic generator parameters (JSON)");
  ingest->add_option("--set", sets, "key=value override");
  ingest->add_option("--train-per-class", train_per_class,
                     "Random per-class train count (class_dirs)");
  ingest->add_option("--seed", seed, "Seed for randomized steps");
  ingest->add_option("--out", out_prefix, "Output prefix (<prefix>.mat + <prefix>.json)")
      ->required();

  // train
  auto* train = app.add_subcommand("train", "Build a model from a dataset's train split");
  std::string data_prefix, config_path, model_dir;
  train->add_option("--data", data_prefix, "Dataset prefix")->required();
  train->add_option("--config", config_path, "Experiment config (JSON)");
  train->add_option("--set", sets, "key=value override");
  train->add_option("--seed", seed, "Seed");
  train->add_option("--out", model_dir, "Model directory")->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Classify samples with a trained model");
  std::string log_path, report_path;
  std::string split_name = "test";
  classify->add_option("--model", model_dir, "Model directory")->required();
  classify->add_option("--data", data_prefix, "Dataset prefix")->required();
  classify->add_option("--split", split_name, "test, train or all")
      ->check(CLI::IsMember({"test", "train", "all"}));
  classify->add_option("--log", log_path, "Per-query JSON-lines log");
  classify->add_option("--out", report_path, "Report path (default stdout)");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Train and evaluate in one run");
  int workers = 0;
  experiment->add_option("--data", data_prefix, "Dataset prefix")->required();
  experiment->add_option("--config", config_path, "Experiment config (JSON)");
  experiment->add_option("--set", sets, "key=value override");
  experiment->add_option("--seed", seed, "Seed for randomized steps");
  experiment->add_option("--workers", workers, "Worker threads");
  experiment->add_option("--log", log_path, "Per-query JSON-lines log");
  experiment->add_option("--out", report_path, "Report path (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Recognition rate over a lambda list");
  std::string lambdas_text, csv_path;
  sweep->add_option("--data", data_prefix, "Dataset prefix")->required();
  sweep->add_option("--config", config_path, "Experiment config (JSON)");
  sweep->add_option("--set", sets, "key=value override");
  sweep->add_option("--seed", seed, "Seed for randomized steps");
  sweep->add_option("--lambdas", lambdas_text, "Comma-separated ascending values")->required();
  sweep->add_option("--csv", csv_path, "Curve CSV path");
  sweep->add_option("--out", report_path, "Reports path (default stdout)");

  // roc
  auto* roc = app.add_subcommand("roc", "SCI validation ROC against imposter classes");
  std::string imposter_text, thresholds_text;
  roc->add_option("--data", data_prefix, "Dataset prefix")->required();
  roc->add_option("--imposters", imposter_text, "Comma-separated imposter class labels")
      ->required();
  roc->add_option("--config", config_path, "Experiment config (JSON)");
  roc->add_option("--set", sets, "key=value override");
  roc->add_option("--seed", seed, "Seed for randomized steps");
  roc->add_option("--thresholds", thresholds_text, "Comma-separated thresholds");
  roc->add_option("--csv", csv_path, "Curve CSV path");
  roc->add_option("--out", report_path, "Result path (default stdout)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Per-query timing of several configs");
  std::vector<std::string> config_paths;
  int repetitions = 3;
  bench_cmd->add_option("--data", data_prefix, "Dataset prefix")->required();
  bench_cmd->add_option("--configs", config_paths, "Experiment configs (JSON)")->required();
  bench_cmd->add_option("--set", sets, "key=value override applied to every config");
  bench_cmd->add_option("--seed", seed, "Seed for randomized steps");
  bench_cmd->add_option("--repetitions", repetitions, "Runs per config (>= 3)");
  bench_cmd->add_option("--out", report_path, "Table path (default stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Coefficient and residual analyses");
  analyze->require_subcommand(1);
  auto* distribution = analyze->add_subcommand("distribution",
                                               "Gaussian / Laplacian fits of pooled coefficients");
  std::string dims_text = "25,50,100,200,300,400";
  double lambda = 1e-4;
  int bins = 101;
  distribution->add_option("--data", data_prefix, "Dataset prefix")->required();
  distribution->add_option("--dims", dims_text, "Comma-separated PCA dimensions");
  distribution->add_option("--lambda", lambda, "Ridge weight");
  distribution->add_option("--bins", bins, "Histogram bins");
  distribution->add_option("--csv", csv_path, "dim,kl_gaussian,kl_laplacian CSV path");
  distribution->add_option("--out", report_path, "Result path (default stdout)");

  auto* geometry = analyze->add_subcommand("geometry", "Residual decomposition of one query");
  std::string class_label;
  int query_index = 0;
  geometry->add_option("--data", data_prefix, "Dataset prefix")->required();
  geometry->add_option("--query", query_index, "Index into the test split");
  geometry->add_option("--class", class_label, "Class label (default: true class)");
  geometry->add_option("--out", report_path, "Result path (default stdout)");

  auto* perturb = analyze->add_subcommand("perturbation",
                                          "Residual change under a random dictionary perturbation");
  int rows = 50, cols = 10;
  std::string xi_text = "1e-4,1e-3,1e-2";
  perturb->add_option("--rows", rows, "Rows of X_i");
  perturb->add_option("--cols", cols, "Columns of X_i");
  perturb->add_option("--xi", xi_text, "Comma-separated relative perturbation sizes");
  perturb->add_option("--seed", seed, "Seed")->required();
  perturb->add_option("--out", report_path, "Result path (default stdout)");

  auto* curves = analyze->add_subcommand("curves", "Residual vs constraint radius per class");
  int p_norm = 2;
  std::string grid_text, classes_text;
  curves->add_option("--data", data_prefix, "Dataset prefix")->required();
  curves->add_option("--query", query_index, "Index into the test split");
  curves->add_option("--p", p_norm, "0, 1 or 2")->check(CLI::IsMember({0, 1, 2}));
  curves->add_option("--grid", grid_text, "Comma-separated radii (sparsity levels for p=0)")
      ->required();
  curves->add_option("--classes", classes_text, "Comma-separated class labels (default all)");
  curves->add_option("--csv", csv_path, "class,epsilon,residual CSV path");
  curves->add_option("--out", report_path, "Result path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), 64);
  }

  try {
    if (*ingest) {
      Dataset data;
      if (synthetic) {
        if (!seed) fail(ErrorCode::ConfigInvalid, "synthetic generation needs --seed");
        json j = synthetic_cfg.empty() ? json::object() : read_json(synthetic_cfg);
        apply_overrides(j, sets);
        j["seed"] = *seed;
        data = make_synthetic(synthetic_from_json(j));
      } else {
        if (in_path.empty()) fail(ErrorCode::MissingPath, "no input path");
        IngestOptions opt;
        if (train_per_class) {
          if (!seed) fail(ErrorCode::ConfigInvalid, "a random split needs --seed");
          opt.train_per_class = train_per_class;
          opt.seed = *seed;
        }
        data = ingest_dataset(in_path, layout == "class_dirs" ? Layout::ClassDirs
                                                              : Layout::MatrixFile, opt);
      }
      save_dataset(out_prefix, data);
      const auto classes = data.classes();
      emit("", {{"dataset", out_prefix},
                {"dim", data.dim()},
                {"samples", data.size()},
                {"classes", classes.size()},
                {"train", data.indices(Split::Train).size()},
                {"test", data.indices(Split::Test).size()}});
    } else if (*train) {
      const Dataset data = load_dataset(data_prefix);
      const ExperimentConfig c = load_config(config_path, sets, seed);
      const Model model = build_model(c, data.select(Split::Train));
      save_model(model_dir, model);
      emit("", {{"model", model_dir},
                {"classifier", to_string(c.classifier)},
                {"lambda", model.lambda},
                {"dictionary_columns", model.dictionary->size()},
                {"fingerprint", fingerprint_hex(model.dictionary->fingerprint())}});
    } else if (*classify) {
      const Model model = load_model(model_dir);
      const Dataset data = load_dataset(data_prefix);
      const Dataset queries = split_name == "all"     ? data
                              : split_name == "train" ? data.select(Split::Train)
                                                      : data.select(Split::Test);
      const Report r = evaluate(model, queries);
      write_log(log_path, r);
      emit(report_path, to_json(r));
    } else if (*experiment) {
      const Dataset data = load_dataset(data_prefix);
      ExperimentConfig c = load_config(config_path, sets, seed);
      if (workers > 0) c.workers = workers;
      const Report r = run_experiment(c, data);
      write_log(log_path, r);
      emit(report_path, to_json(r));
    } else if (*sweep) {
      const Dataset data = load_dataset(data_prefix);
      const ExperimentConfig c = load_config(config_path, sets, seed);
      const auto lambdas = parse_list(lambdas_text);
      const auto reports = lambda_sweep(c, data, lambdas);
      if (!csv_path.empty()) write_text(csv_path, sweep_csv(reports));
      json out = json::array();
      for (const auto& r : reports) out.push_back(to_json(r));
      emit(report_path, out);
    } else if (*roc) {
      const Dataset data = load_dataset(data_prefix);
      const ExperimentConfig c = load_config(config_path, sets, seed);
      const auto imposter_labels = parse_labels(imposter_text);
      const Dataset known = data.filter_labels(imposter_labels, false);
      const Dataset imposters = data.filter_labels(imposter_labels, true);
      const auto thresholds =
          thresholds_text.empty() ? default_roc_thresholds() : parse_list(thresholds_text);
      const RocCurve curve = run_roc(c, known.select(Split::Train), known.select(Split::Test),
                                     imposters.select(Split::Test), thresholds);
      if (!csv_path.empty()) write_text(csv_path, roc_csv(curve));
      emit(report_path, to_json(curve));
    } else if (*bench_cmd) {
      const Dataset data = load_dataset(data_prefix);
      std::vector<ExperimentConfig> configs;
      for (const auto& path : config_paths) configs.push_back(load_config(path, sets, seed));
      emit(report_path, to_json(bench(configs, data, repetitions)));
    } else if (*distribution) {
      const Dataset data = load_dataset(data_prefix);
      json out = json::array();
      std::string csv = "dim,kl_gaussian,kl_laplacian\n";
      for (double d : parse_list(dims_text)) {
        const auto dim = static_cast<Eigen::Index>(d);
        const FitReport f =
            coef_distribution_fit(pooled_coding_coefficients(data, dim, lambda), bins);
        json entry = to_json(f);
        entry["dim"] = dim;
        out.push_back(entry);
        std::ostringstream row;
        row.precision(17);
        row << dim << ',' << f.kl_gaussian << ',' << f.kl_laplacian << '\n';
        csv += row.str();
      }
      if (!csv_path.empty()) write_text(csv_path, csv);
      emit(report_path, out);
    } else if (*geometry) {
      const Dataset data = load_dataset(data_prefix);
      const Dataset tr = data.select(Split::Train);
      const Dataset te = data.select(Split::Test);
      if (query_index < 0 || query_index >= te.size())
        fail(ErrorCode::ConfigInvalid, "query index out of range");
      const Dictionary dict = Dictionary::from_matrix(tr.features, tr.labels);
      const Eigen::VectorXd y = te.features.col(query_index);
      const Label target =
          class_label.empty() ? te.labels[static_cast<std::size_t>(query_index)] : class_label;
      json out = to_json(geometry_check(dict, y, target));
      out["class"] = target;
      emit(report_path, out);
    } else if (*perturb) {
      Rng rng(*seed);
      const Eigen::MatrixXd x = rng.normal_matrix(rows, cols);
      const Eigen::MatrixXd direction = rng.normal_matrix(rows, cols);
      const Eigen::VectorXd y = rng.normal_vector(rows);
      json out = json::array();
      for (double xi : parse_list(xi_text)) {
        const Eigen::MatrixXd delta = direction * (xi * x.norm() / direction.norm());
        out.push_back(to_json(perturbation_demo(x, delta, y)));
      }
      emit(report_path, out);
    } else if (*curves) {
      const Dataset data = load_dataset(data_prefix);
      const Dataset tr = data.select(Split::Train);
      const Dataset te = data.select(Split::Test);
      if (query_index < 0 || query_index >= te.size())
        fail(ErrorCode::ConfigInvalid, "query index out of range");
      const Dictionary dict = Dictionary::from_matrix(tr.features, tr.labels);
      const Eigen::VectorXd y = normalize_query(te.features.col(query_index));
      std::vector<Label> labels = parse_labels(classes_text);
      if (labels.empty())
        for (const auto& c : dict.classes()) labels.push_back(c.label);
      std::vector<Eigen::MatrixXd> blocks;
      for (const auto& l : labels) blocks.push_back(dict.block(dict.class_index(l)));
      const auto grid = parse_list(grid_text);
      const auto result = residual_eps_study(blocks, y, p_norm, grid);
      json out = json::array();
      std::ostringstream csv;
      csv.precision(17);
      csv << "class,epsilon,residual\n";
      for (std::size_t i = 0; i < labels.size(); ++i) {
        json pts = json::array();
        for (const auto& pt : result[i]) {
          pts.push_back({{"epsilon", pt.epsilon}, {"residual", pt.residual}});
          csv << labels[i] << ',' << pt.epsilon << ',' << pt.residual << '\n';
        }
        out.push_back({{"class", labels[i]}, {"curve", pts}});
      }
      if (!csv_path.empty()) write_text(csv_path, csv.str());
      emit(report_path, {{"query", query_index},
                         {"true_class", te.labels[static_cast<std::size_t>(query_index)]},
                         {"p", p_norm},
                         {"curves", out}});
    }
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.code())), e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), 1);
  }
  return 0;
}
