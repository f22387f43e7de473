#include <filesystem>
#include <fstream>
#include <sstream>

#include "collabrep/dataset.hpp"
#include "collabrep/experiment.hpp"
#include "collabrep/matrix_io.hpp"
#include "support.hpp"

using namespace collabrep;
using testing::expect_error;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset small_synthetic(std::uint64_t seed, int imposters = 0) {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.subspace_dim = 5;
  spec.ambient_dim = 50;
  spec.train_per_class = 10;
  spec.test_per_class = 5;
  spec.noise = 0.2;
  spec.imposter_classes = imposters;
  spec.seed = seed;
  return make_synthetic(spec);
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("matrix format round trip") {
  Eigen::MatrixXd m = testing::random_matrix(4, 7, 1);
  std::stringstream buf;
  write_matrix(buf, m);
  CHECK(buf.str().size() == 8 + 16 + 8 * 28);
  auto back = read_matrix(buf);
  CHECK(back == m);

  std::stringstream junk("not a matrix at all, really");
  expect_error(ErrorCode::MalformedMatrix, [&] { read_matrix(junk); });
  CHECK(parse_csv_matrix("1,2\n3,4\n") == Eigen::Matrix2d{{1, 2}, {3, 4}});
}

TEST_CASE("derived seeds do not depend on processing order") {
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  CHECK(derive_seed(5, 3) != derive_seed(5, 4));
  CHECK(derive_seed(5, 3) != derive_seed(6, 3));
  collabrep::Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("ingest class directories") {
  TempDir tmp("collabrep_unit_ingest");
  for (const char* cls : {"bob", "alice"}) {
    fs::create_directories(tmp.path / cls);
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd img = Eigen::MatrixXd::Constant(4, 3, 10.0 * i + (cls[0] == 'a' ? 1 : 2));
      write_pgm(tmp.path / cls / ("img" + std::to_string(i) + ".pgm"), img);
    }
  }
  auto d = ingest_dataset(tmp.path, Layout::ClassDirs);
  CHECK(d.size() == 6);
  CHECK(d.classes().size() == 2);
  CHECK(d.labels.front() == "alice");
  CHECK(d.image_rows == 4);
  CHECK(d.image_cols == 3);

  IngestOptions opts;
  opts.train_per_class = 2;
  opts.seed = 3;
  auto split = ingest_dataset(tmp.path, Layout::ClassDirs, opts);
  CHECK(split.indices(Split::Train).size() == 4);
  CHECK(split.indices(Split::Test).size() == 2);

  write_pgm(tmp.path / "bob" / "odd.pgm", Eigen::MatrixXd::Zero(5, 5));
  expect_error(ErrorCode::MixedImageSizes, [&] { ingest_dataset(tmp.path, Layout::ClassDirs); });
}

TEST_CASE("ingest matrix file") {
  TempDir tmp("collabrep_unit_matrix");
  save_matrix(tmp.path / "m.mat", testing::random_matrix(5, 3, 2));
  std::ofstream(tmp.path / "m.json") << R"({"labels": ["A", "A", "B"]})";
  auto d = ingest_dataset(tmp.path / "m.mat", Layout::MatrixFile);
  CHECK(d.size() == 3);
  CHECK(d.classes().size() == 2);

  auto syn = small_synthetic(1);
  save_dataset(tmp.path / "syn", syn);
  auto back = load_dataset(tmp.path / "syn");
  CHECK(back.features == syn.features);
  CHECK(back.labels == syn.labels);
  CHECK(back.split == syn.split);
}

TEST_CASE("synthetic generator is deterministic and partitioned") {
  auto a = small_synthetic(4, 2);
  auto b = small_synthetic(4, 2);
  CHECK(a.features == b.features);
  CHECK(a.size() == 10 * 15 + 2 * 5);
  a.validate(true);
  expect_error(ErrorCode::ConfigInvalid, [&] { a.validate(false); });
}

TEST_CASE("config parsing and overrides") {
  nlohmann::json j = {{"classifier", "rcrc"}, {"lambda", 0.5}, {"alm", {{"rho", 1.5}}}};
  std::vector<std::string> sets{"lambda=2", "alm.max_iter=40", "seed=9"};
  apply_overrides(j, sets);
  auto c = config_from_json(j);
  CHECK(c.classifier == ClassifierKind::Rcrc);
  CHECK(*c.lambda == 2.0);
  CHECK(c.alm.rho == 1.5);
  CHECK(c.alm.max_iter == 40);
  CHECK(c.seed == 9);
  auto again = config_from_json(to_json(c));
  CHECK(to_json(again) == to_json(c));

  expect_error(ErrorCode::ConfigInvalid, [] { config_from_json({{"classifier", "crc_rls"}, {"alm", nlohmann::json::object()}}); });
  expect_error(ErrorCode::ConfigInvalid, [] { config_from_json({{"colour", 1}}); });
  expect_error(ErrorCode::ConfigInvalid, [] { config_from_json({{"classifier", "svm"}}); });
}

TEST_CASE("run_experiment") {
  auto data = small_synthetic(6);
  ExperimentConfig crc;
  ExperimentConfig nn;
  nn.classifier = ClassifierKind::Nn;
  auto rc = run_experiment(crc, data);
  auto rn = run_experiment(nn, data);
  CHECK(rc.recognition_rate >= rn.recognition_rate);
  CHECK(rc.recognition_rate == static_cast<double>(rc.correct) / static_cast<double>(rc.total));
  CHECK(rc.total == 50);

  SUBCASE("zero-fraction degradation equals none") {
    ExperimentConfig deg = crc;
    deg.degradation = DegradationSpec{};
    auto rd = run_experiment(deg, data);
    CHECK(rd.correct == rc.correct);
    CHECK(rd.confusion == rc.confusion);
    for (std::size_t q = 0; q < rc.queries.size(); ++q) CHECK(rd.queries[q].residuals == rc.queries[q].residuals);
  }

  SUBCASE("determinism across runs and worker counts") {
    ExperimentConfig par = crc;
    par.workers = 3;
    auto again = run_experiment(crc, data);
    auto rp = run_experiment(par, data);
    CHECK(again.confusion == rc.confusion);
    for (std::size_t q = 0; q < rc.queries.size(); ++q) {
      CHECK(again.queries[q].residuals == rc.queries[q].residuals);
      CHECK(rp.queries[q].residuals == rc.queries[q].residuals);
    }
  }

  SUBCASE("log recount matches the report") {
    std::stringstream log;
    write_query_log(log, rc);
    auto [correct, total] = recount_query_log(log);
    CHECK(correct == rc.correct);
    CHECK(total == rc.total);
  }
}

TEST_CASE("model directory round trip") {
  TempDir tmp("collabrep_unit_model");
  auto data = small_synthetic(7);
  ExperimentConfig cfg;
  cfg.feature_dim = 20;
  auto model = build_model(cfg, data.select(Split::Train));
  save_model(tmp.path, model);
  auto back = load_model(tmp.path);
  auto test = data.select(Split::Test);
  auto a = evaluate(model, test);
  auto b = evaluate(back, test);
  CHECK(a.correct == b.correct);
  for (std::size_t q = 0; q < a.queries.size(); ++q) CHECK(a.queries[q].residuals == b.queries[q].residuals);
}

TEST_CASE("lambda_sweep") {
  auto data = small_synthetic(8);
  ExperimentConfig cfg;
  std::vector<double> one{0.01};
  auto single = lambda_sweep(cfg, data, one);
  REQUIRE(single.size() == 1);
  cfg.lambda = 0.01;
  auto direct = run_experiment(cfg, data);
  CHECK(single[0].correct == direct.correct);
  CHECK(single[0].confusion == direct.confusion);

  std::vector<double> many{1e-3, 0.01, 1.0};
  auto sweep = lambda_sweep(cfg, data, many);
  CHECK(sweep[1].correct == direct.correct);
  CHECK(sweep_csv(sweep).rfind("lambda,recognition_rate,correct,total", 0) == 0);

  std::vector<double> bad{1.0, 0.1};
  CHECK_THROWS_AS(lambda_sweep(cfg, data, bad), Error);
}

TEST_CASE("run_roc") {
  auto data = small_synthetic(9, 3);
  std::vector<Label> imp{"imp00", "imp01", "imp02"};
  auto gallery_all = data.filter_labels(imp, false);
  auto gallery = gallery_all.select(Split::Train);
  auto customers = gallery_all.select(Split::Test);
  auto imposters = data.filter_labels(imp, true);
  ExperimentConfig cfg;
  std::vector<double> thr{0.0, 0.3, 0.6, std::nextafter(1.0, 2.0)};
  auto roc = run_roc(cfg, gallery, customers, imposters, thr);
  REQUIRE(roc.points.size() == 4);
  CHECK(roc.points.front().fpr == 1.0);
  CHECK(roc.points.back().fpr == 0.0);
  CHECK(roc.points.back().tpr == 0.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].fpr <= roc.points[i - 1].fpr);
    CHECK(roc.points[i].tpr <= roc.points[i - 1].tpr);
  }
  CHECK(roc.auc >= 0.0);
  CHECK(roc.auc <= 1.0);

  expect_error(ErrorCode::OverlappingClasses, [&] { run_roc(cfg, gallery, customers, customers, thr); });
  ExperimentConfig nn;
  nn.classifier = ClassifierKind::Nn;
  expect_error(ErrorCode::ConfigInvalid, [&] { run_roc(nn, gallery, customers, imposters, thr); });
}

TEST_CASE("roc_auc trapezoid") {
  // (0,0) -> (0.5,0.5) -> (1,0.5)
  std::vector<RocPoint> half{{0.5, 0.5, 0.5}};
  CHECK(roc_auc(half) == doctest::Approx(0.125 + 0.25));
  std::vector<RocPoint> perfect{{0.5, 1.0, 0.0}};
  CHECK(roc_auc(perfect) == doctest::Approx(1.0));
}

TEST_CASE("bench") {
  auto data = small_synthetic(10);
  ExperimentConfig crc;
  ExperimentConfig nn;
  nn.classifier = ClassifierKind::Nn;
  std::vector<ExperimentConfig> configs{crc, nn};
  auto a = bench(configs, data, 3);
  auto b = bench(configs, data, 3);
  REQUIRE(a.rows.size() == 2);
  CHECK(a.rows[0].offline_seconds > 0.0);
  CHECK(a.rows[0].rates_identical);
  CHECK(a.rows[0].queries == 50);
  CHECK(a.rows[0].recognition_rate == b.rows[0].recognition_rate);
  CHECK(a.rows[1].recognition_rate == b.rows[1].recognition_rate);
  CHECK(a.speedup[0][0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(bench(configs, data, 2), Error);
}

}
