#include <filesystem>

#include "collabrep/features.hpp"
#include "support.hpp"

using namespace collabrep;

TEST_SUITE("features") {

TEST_CASE("two symmetric points") {
  Eigen::MatrixXd pts(3, 2);
  pts << 1, -1, 2, -2, -0.5, 0.5;
  auto m = fit_pca(pts, 1);
  CHECK(m.mean.norm() < 1e-15);
  Eigen::Vector3d diff = (pts.col(0) - pts.col(1)).normalized();
  CHECK(std::abs(std::abs(m.basis.col(0).dot(diff)) - 1.0) < 1e-12);
  // Largest-magnitude entry is nonnegative.
  Eigen::Index at;
  m.basis.col(0).cwiseAbs().maxCoeff(&at);
  CHECK(m.basis(at, 0) >= 0.0);
}

TEST_CASE("d = N - 1 reconstructs the training data") {
  Eigen::MatrixXd x = testing::random_matrix(20, 8, 1);
  auto m = fit_pca(x, 7);
  CHECK((m.basis.transpose() * m.basis - Eigen::MatrixXd::Identity(7, 7)).norm() < 1e-8);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    CHECK((reconstruct_pca(m, project_pca(m, Eigen::VectorXd(x.col(j)))) - x.col(j)).norm() < 1e-8);
  }
}

TEST_CASE("duplicating or reordering samples leaves the model unchanged") {
  Eigen::MatrixXd x = testing::random_matrix(10, 6, 2);
  Eigen::MatrixXd twice(10, 12);
  twice << x, x;
  Eigen::MatrixXd reversed = x.rowwise().reverse();
  auto a = fit_pca(x, 3);
  auto b = fit_pca(twice, 3);
  auto c = fit_pca(reversed, 3);
  CHECK((a.mean - b.mean).norm() < 1e-12);
  CHECK((a.basis - b.basis).norm() < 1e-10);
  CHECK((a.basis - c.basis).norm() < 1e-10);
}

TEST_CASE("projection energies are nonincreasing") {
  Eigen::MatrixXd x = testing::random_matrix(15, 40, 3);
  auto m = fit_pca(x, 10);
  Eigen::MatrixXd codes = project_pca(m, x);
  Eigen::VectorXd energy = codes.rowwise().squaredNorm();
  for (Eigen::Index i = 1; i < energy.size(); ++i) CHECK(energy[i] <= energy[i - 1] * (1 + 1e-12));
  for (Eigen::Index i = 1; i < m.variances.size(); ++i) CHECK(m.variances[i] <= m.variances[i - 1]);
}

TEST_CASE("projection of the mean and basis directions") {
  Eigen::MatrixXd x = testing::random_matrix(9, 12, 4);
  auto m = fit_pca(x, 4);
  CHECK(project_pca(m, m.mean).norm() < 1e-14);
  for (Eigen::Index j = 0; j < 4; ++j) {
    Eigen::VectorXd code = project_pca(m, Eigen::VectorXd(m.mean + m.basis.col(j)));
    CHECK((code - Eigen::VectorXd::Unit(4, j)).norm() < 1e-12);
  }
}

TEST_CASE("bad dimension") {
  testing::expect_error(ErrorCode::BadDimension, [] { fit_pca(Eigen::MatrixXd::Ones(3, 2), 5); });
}

TEST_CASE("vectorize is column major") {
  CHECK(vectorize_image(Eigen::MatrixXd::Constant(1, 1, 5)) == Eigen::VectorXd::Constant(1, 5));
  Eigen::Matrix2d img;
  img << 1, 2, 3, 4;
  CHECK(vectorize_image(img) == Eigen::Vector4d(1, 3, 2, 4));
  CHECK(reshape_image(vectorize_image(img), 2, 2) == Eigen::MatrixXd(img));
}

TEST_CASE("pca round trip through files") {
  auto dir = std::filesystem::temp_directory_path() / "collabrep_unit_pca";
  std::filesystem::create_directories(dir);
  auto m = fit_pca(testing::random_matrix(8, 10, 5), 3);
  save_pca(dir / "f", m);
  auto back = load_pca(dir / "f");
  CHECK(back.mean == m.mean);
  CHECK(back.basis == m.basis);
  std::filesystem::remove_all(dir);
}

}
