#include <algorithm>
#include <cmath>
#include <numeric>

#include "collabrep/classifiers.hpp"
#include "collabrep/dataset.hpp"
#include "support.hpp"

using namespace collabrep;
using testing::expect_error;

namespace {

Dictionary basis_dictionary(int k) {
  std::vector<Label> labels;
  for (int i = 0; i < k; ++i) labels.push_back(std::string(1, static_cast<char>('A' + i)));
  return Dictionary::from_matrix(Eigen::MatrixXd::Identity(k, k), labels);
}

CodingResult coding_with(const Eigen::VectorXd& alpha) {
  CodingResult c;
  c.alpha = alpha;
  return c;
}

// Per-class least-squares residual norms through a long-double pseudoinverse.
std::vector<double> ns_oracle(const Dictionary& d, const Eigen::VectorXd& y) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<double> out;
  for (std::size_t k = 0; k < d.num_classes(); ++k) {
    MatL xk = Eigen::MatrixXd(d.block(k)).cast<long double>();
    Eigen::JacobiSVD<MatL> svd(xk, Eigen::ComputeThinU);
    const auto& u = svd.matrixU();
    Eigen::Matrix<long double, Eigen::Dynamic, 1> yl = y.cast<long double>();
    auto proj = u * (u.transpose() * yl);
    out.push_back(static_cast<double>((yl - proj).norm()));
  }
  return out;
}

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("src on orthonormal atoms") {
  auto d = basis_dictionary(2);
  FistaParams fp;
  fp.tol = 1e-14;
  auto a = classify_src(d, Eigen::Vector2d(1, 0), 0.01, fp);
  CHECK(a.predicted == "A");
  CHECK(a.residuals[0] == doctest::Approx(0.005).epsilon(1e-3));
  CHECK(a.residuals[1] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(classify_src(d, Eigen::Vector2d(0, 1), 0.01, fp).predicted == "B");
}

TEST_CASE("src finds the right single-atom class") {
  Eigen::MatrixXd q = testing::random_matrix(12, 5, 3).householderQr().householderQ() *
                      Eigen::MatrixXd::Identity(12, 5);
  std::vector<Label> labels{"c1", "c2", "c3", "c4", "c5"};
  auto d = Dictionary::from_matrix(q, labels);
  Eigen::VectorXd y = q.col(2) + 0.01 * testing::random_vector(12, 4);
  auto dec = classify_src(d, y, 0.01);
  // Exhaustive check: the smallest residual belongs to the class of atom 3.
  CHECK(dec.predicted == "c3");
  auto best = std::min_element(dec.residuals.begin(), dec.residuals.end());
  CHECK(best - dec.residuals.begin() == 2);
}

TEST_CASE("crc_rls closed form") {
  auto d = basis_dictionary(2);
  auto p = build_projector(d, 0.01);
  auto dec = classify_crc_rls(p, d, Eigen::Vector2d(1, 0));
  CHECK((dec.coding.alpha - Eigen::Vector2d(1 / 1.01, 0)).norm() < 1e-14);
  CHECK(dec.residuals[0] == doctest::Approx(0.01));
  CHECK(std::isinf(dec.residuals[1]));
  CHECK(dec.predicted == "A");

  auto scaled = classify_crc_rls(p, d, Eigen::Vector2d(7, 0));
  CHECK(scaled.predicted == "A");
  CHECK(scaled.residuals[0] == doctest::Approx(dec.residuals[0]).epsilon(1e-14));
  CHECK(std::isinf(scaled.residuals[1]));
}

TEST_CASE("crc_rls beats nearest neighbour on subspace data") {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.subspace_dim = 5;
  spec.ambient_dim = 50;
  spec.train_per_class = 10;
  spec.test_per_class = 20;
  spec.noise = 0.3;
  spec.seed = 5;
  auto data = make_synthetic(spec);
  auto train = data.select(Split::Train);
  auto test = data.select(Split::Test);
  auto d = Dictionary::from_matrix(train.features, train.labels);
  auto p = build_default_projector(d);
  int crc = 0, nn = 0;
  for (Eigen::Index j = 0; j < test.features.cols(); ++j) {
    const auto& truth = test.labels[static_cast<std::size_t>(j)];
    crc += classify_crc_rls(p, d, test.features.col(j)).predicted == truth;
    nn += classify_nn(d, test.features.col(j)).predicted == truth;
  }
  CHECK(crc > nn);
}

TEST_CASE("rcrc") {
  auto d = testing::blocked_dictionary(testing::random_matrix(30, 6, 8), 3);

  SUBCASE("clean atom, tiny lambda") {
    auto dec = classify_rcrc(d, d.data().col(3), 1e-6);
    CHECK(dec.predicted == "k1");
    CHECK(dec.coding.residual->norm() <= 1e-3);
  }

  SUBCASE("zero query is degenerate") {
    auto dec = classify_rcrc(d, Eigen::VectorXd::Zero(30), 1.0);
    CHECK(dec.degenerate);
    CHECK(dec.predicted == "k0");
    for (double r : dec.residuals) CHECK(std::isinf(r));
  }

  SUBCASE("robust to sparse outliers") {
    int rcrc_ok = 0, crc_ok = 0;
    auto p = build_projector(d, 1e-3);
    collabrep::Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd y = d.data().col(0);
      for (auto i : rng.sample_without_replacement(30, 12)) y[static_cast<Eigen::Index>(i)] = rng.uniform(-3, 3);
      rcrc_ok += classify_rcrc(d, y, 1.0).predicted == "k0";
      crc_ok += classify_crc_rls(p, d, y).predicted == "k0";
    }
    CHECK(rcrc_ok >= crc_ok);
    CHECK(rcrc_ok >= 15);
  }
}

TEST_CASE("rns") {
  auto d = basis_dictionary(2);
  for (int p : {1, 2}) CHECK(classify_rns(d, Eigen::Vector2d(1, 0), 0.01, p).predicted == "A");

  collabrep::Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    auto dict = testing::blocked_dictionary(rng.normal_matrix(20, 12), 4);
    Eigen::VectorXd y = rng.normal_vector(20);
    auto ns = classify_ns(dict, y);
    auto rns = classify_rns(dict, y, 1e-10, 2);
    std::vector<std::size_t> a(4), b(4);
    std::iota(a.begin(), a.end(), 0);
    b = a;
    std::sort(a.begin(), a.end(), [&](auto i, auto j) { return ns.residuals[i] < ns.residuals[j]; });
    std::sort(b.begin(), b.end(), [&](auto i, auto j) { return rns.residuals[i] < rns.residuals[j]; });
    CHECK(a == b);
    CHECK(ns.predicted == rns.predicted);
  }
}

TEST_CASE("nn") {
  auto d = testing::blocked_dictionary(testing::random_matrix(6, 9, 14), 3);
  auto hit = classify_nn(d, d.data().col(4));
  CHECK(hit.predicted == "k1");
  CHECK(hit.residuals[1] == doctest::Approx(0.0));

  SUBCASE("ties resolve to the earliest class") {
    std::vector<Label> labels{"A", "B"};
    auto two = Dictionary::from_matrix(Eigen::MatrixXd::Identity(2, 2), labels);
    CHECK(classify_nn(two, Eigen::Vector2d(1, 1)).predicted == "A");
  }

  SUBCASE("matches a brute-force scan") {
    collabrep::Rng rng(15);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd y = rng.normal_vector(6);
      Eigen::VectorXd u = y.normalized();
      Eigen::Index best = 0;
      double best_d = INFINITY;
      for (Eigen::Index j = 0; j < d.size(); ++j) {
        const double dist = (u - d.data().col(j)).norm();
        if (dist < best_d) best_d = dist, best = j;
      }
      CHECK(classify_nn(d, y).predicted == d.column_labels()[static_cast<std::size_t>(best)]);
    }
  }
}

TEST_CASE("ns") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 4);
  x(0, 0) = 1, x(1, 1) = 1, x(2, 2) = 1, x(3, 3) = 1;
  std::vector<Label> labels{"A", "A", "B", "B"};
  auto d = Dictionary::from_matrix(x, labels);
  auto dec = classify_ns(d, Eigen::Vector4d(0.3, -2, 0, 0));
  CHECK(dec.predicted == "A");
  CHECK(dec.residuals[0] <= 1e-10);

  auto single = Dictionary::from_matrix(testing::random_matrix(5, 3, 2),
                                        std::vector<Label>{"only", "only", "only"});
  CHECK(classify_ns(single, testing::random_vector(5, 3)).predicted == "only");

  collabrep::Rng rng(16);
  for (int t = 0; t < 30; ++t) {
    auto dict = testing::blocked_dictionary(rng.normal_matrix(10, 9), 3);
    Eigen::VectorXd y = rng.normal_vector(10);
    auto got = classify_ns(dict, y);
    auto want = ns_oracle(dict, y.normalized());
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(got.residuals[k] - want[k]) <= 1e-10);
  }
}

TEST_CASE("argmin is scale invariant for every classifier") {
  auto d = testing::blocked_dictionary(testing::random_matrix(15, 12, 20), 4);
  auto p = build_projector(d, 0.01);
  collabrep::Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd y = rng.normal_vector(15);
    for (double c : {0.001, 3.0, 250.0}) {
      CHECK(classify_crc_rls(p, d, c * y).predicted == classify_crc_rls(p, d, y).predicted);
      CHECK(classify_nn(d, c * y).predicted == classify_nn(d, y).predicted);
      CHECK(classify_ns(d, c * y).predicted == classify_ns(d, y).predicted);
      CHECK(classify_src(d, c * y, 0.01).predicted == classify_src(d, y, 0.01).predicted);
      CHECK(classify_rcrc(d, c * y, 0.5).predicted == classify_rcrc(d, y, 0.5).predicted);
      CHECK(classify_rns(d, c * y, 0.01, 2).predicted == classify_rns(d, y, 0.01, 2).predicted);
    }
  }
}

TEST_CASE("class permutation permutes residuals") {
  Eigen::MatrixXd raw = testing::random_matrix(12, 9, 22);
  std::vector<Label> fwd{"a", "a", "a", "b", "b", "b", "c", "c", "c"};
  Eigen::MatrixXd rev(12, 9);
  rev << raw.middleCols(6, 3), raw.middleCols(3, 3), raw.middleCols(0, 3);
  std::vector<Label> back{"c", "c", "c", "b", "b", "b", "a", "a", "a"};
  auto d1 = Dictionary::from_matrix(raw, fwd);
  auto d2 = Dictionary::from_matrix(rev, back);
  auto p1 = build_projector(d1, 0.01);
  auto p2 = build_projector(d2, 0.01);
  Eigen::VectorXd y = testing::random_vector(12, 23);
  auto a = classify_crc_rls(p1, d1, y);
  auto b = classify_crc_rls(p2, d2, y);
  CHECK(a.predicted == b.predicted);
  for (int k = 0; k < 3; ++k) CHECK(a.residuals[k] == doctest::Approx(b.residuals[2 - k]).epsilon(1e-10));
}

TEST_CASE("crc residual decomposition") {
  auto d = testing::blocked_dictionary(testing::random_matrix(20, 8, 24), 2);
  Eigen::VectorXd y = testing::random_vector(20, 25).normalized();
  auto p = build_projector(d, 1e-11);
  Eigen::VectorXd a = p.apply(y);
  Eigen::VectorXd yhat = d.data() * a;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = d.classes()[k];
    Eigen::VectorXd part = d.block(k) * a.segment(c.begin, c.size());
    const double lhs = (y - part).squaredNorm();
    const double rhs = (y - yhat).squaredNorm() + (yhat - part).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-8 * lhs);
  }
}

TEST_CASE("sci") {
  auto d4 = basis_dictionary(4);
  auto d2 = basis_dictionary(2);
  CHECK(compute_sci(d2, coding_with(Eigen::Vector2d(0.7, 0))) == doctest::Approx(1.0));
  CHECK(compute_sci(d4, coding_with(Eigen::Vector4d(0.5, -0.5, 0.5, 0.5))) ==
        doctest::Approx(0.0));
  CHECK(compute_sci(d4, coding_with(Eigen::Vector4d(0.4, 0.3, -0.2, 0.1))) ==
        doctest::Approx((4 * 0.4 - 1) / 3.0));
  CHECK(compute_sci(d4, coding_with(Eigen::Vector4d::Zero())) == 0.0);
  auto d1 = basis_dictionary(1);
  expect_error(ErrorCode::SingleClass, [&] { compute_sci(d1, coding_with(Eigen::VectorXd::Ones(1))); });

  collabrep::Rng rng(26);
  for (int t = 0; t < 100; ++t) {
    const double s = compute_sci(d4, coding_with(rng.normal_vector(4)));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("validate") {
  auto d = basis_dictionary(3);
  CHECK(validate(d, coding_with(Eigen::Vector3d(1, 0, 0)), 0.5).accepted);
  CHECK_FALSE(validate(d, coding_with(Eigen::Vector3d(1, 1, 1)), 0.1).accepted);
  expect_error(ErrorCode::BadThreshold, [&] { validate(d, coding_with(Eigen::Vector3d(1, 0, 0)), 1.5); });

  collabrep::Rng rng(27);
  std::vector<CodingResult> set;
  for (int i = 0; i < 40; ++i) set.push_back(coding_with(rng.normal_vector(3)));
  int prev = static_cast<int>(set.size()) + 1;
  for (int step = 0; step <= 100; ++step) {
    int accepted = 0;
    for (const auto& c : set) accepted += validate(d, c, step / 100.0).accepted;
    CHECK(accepted <= prev);
    prev = accepted;
  }
}

}
