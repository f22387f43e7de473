#include "collabrep/features.hpp"

#include <fstream>

#include <Eigen/SVD>
#include <json.hpp>

#include "collabrep/errors.hpp"
#include "collabrep/matrix_io.hpp"

namespace collabrep {

PcaModel fit_pca(const Eigen::MatrixXd& training, Eigen::Index d) {
  const Eigen::Index dim = training.rows();
  const Eigen::Index count = training.cols();
  if (d < 1 || d > std::min(dim, count))
    fail(ErrorCode::BadDimension, "PCA dimension " + std::to_string(d) +
                                      " outside [1, min(D, N)] = [1, " +
                                      std::to_string(std::min(dim, count)) + "]");

  PcaModel model;
  model.mean = training.rowwise().mean();
  const Eigen::MatrixXd centered = training.colwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.basis = svd.matrixU().leftCols(d);
  model.variances = svd.singularValues().head(d).array().square() /
                    static_cast<double>(count);

  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index top = 0;
    model.basis.col(j).cwiseAbs().maxCoeff(&top);
    if (model.basis(top, j) < 0.0) model.basis.col(j) *= -1.0;
  }
  return model;
}

Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim())
    fail(ErrorCode::DimensionMismatch, "input dimension differs from PCA model");
  return model.basis.transpose() * (x - model.mean);
}

Eigen::MatrixXd project_pca(const PcaModel& model, const Eigen::MatrixXd& xs) {
  if (xs.rows() != model.input_dim())
    fail(ErrorCode::DimensionMismatch, "input dimension differs from PCA model");
  return model.basis.transpose() * (xs.colwise() - model.mean);
}

Eigen::VectorXd reconstruct_pca(const PcaModel& model, const Eigen::VectorXd& code) {
  if (code.size() != model.dim())
    fail(ErrorCode::DimensionMismatch, "code dimension differs from PCA model");
  return model.mean + model.basis * code;
}

Eigen::VectorXd vectorize_image(const Eigen::MatrixXd& image) {
  if (image.rows() < 1 || image.cols() < 1)
    fail(ErrorCode::EmptyImage, "image has no pixels");
  // Eigen's default storage is column-major, so the raw buffer is the
  // flattening.
  return Eigen::Map<const Eigen::VectorXd>(image.data(), image.size());
}

Eigen::MatrixXd reshape_image(const Eigen::VectorXd& v, Eigen::Index rows,
                              Eigen::Index cols) {
  if (rows < 1 || cols < 1) fail(ErrorCode::EmptyImage, "image has no pixels");
  if (v.size() != rows * cols)
    fail(ErrorCode::DimensionMismatch, "vector length differs from rows * cols");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void save_pca(const std::filesystem::path& prefix, const PcaModel& model) {
  Eigen::MatrixXd packed(model.input_dim(), model.dim() + 1);
  packed.col(0) = model.mean;
  packed.rightCols(model.dim()) = model.basis;
  auto mat_path = prefix;
  mat_path += ".pca.mat";
  save_matrix(mat_path, packed);

  nlohmann::json j;
  j["format"] = "collabrep.pca/1";
  j["D"] = model.input_dim();
  j["d"] = model.dim();
  j["sign_convention"] = kPcaSignConvention;
  j["variances"] = std::vector<double>(model.variances.data(),
                                       model.variances.data() + model.variances.size());
  auto json_path = prefix;
  json_path += ".pca.json";
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + json_path.string());
  out << j.dump(2) << '\n';
}

PcaModel load_pca(const std::filesystem::path& prefix) {
  auto mat_path = prefix;
  mat_path += ".pca.mat";
  auto json_path = prefix;
  json_path += ".pca.json";
  const Eigen::MatrixXd packed = load_matrix(mat_path);
  if (!std::filesystem::exists(json_path))
    fail(ErrorCode::MissingPath, "no such file: " + json_path.string());
  nlohmann::json j;
  try {
    std::ifstream in(json_path);
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, std::string("PCA sidecar: ") + e.what());
  }
  const auto d = j.value("d", Eigen::Index{-1});
  if (packed.cols() != d + 1 || packed.rows() != j.value("D", Eigen::Index{-1}))
    fail(ErrorCode::MalformedMatrix, "PCA sidecar dimensions disagree with matrix");
  PcaModel model;
  model.mean = packed.col(0);
  model.basis = packed.rightCols(d);
  const auto var = j.value("variances", std::vector<double>{});
  model.variances = Eigen::Map<const Eigen::VectorXd>(var.data(),
                                                      static_cast<Eigen::Index>(var.size()));
  return model;
}

}  // namespace collabrep
