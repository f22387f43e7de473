#pragma once

#include <filesystem>

#include <Eigen/Core>

namespace collabrep {

// Eigenface model. Component signs follow one convention: the entry of
// largest magnitude in each basis column is nonnegative.
struct PcaModel {
  Eigen::VectorXd mean;       // length D
  Eigen::MatrixXd basis;      // D x d, orthonormal columns
  Eigen::VectorXd variances;  // per-component variance of the training data

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index dim() const { return basis.cols(); }
};

inline constexpr const char* kPcaSignConvention = "max-abs-entry-nonnegative";

// Fits the top-d principal directions of the columns of `training` (D x N)
// from an SVD of the centered data. Throws BadDimension unless
// 1 <= d <= min(D, N).
PcaModel fit_pca(const Eigen::MatrixXd& training, Eigen::Index d);

// basis^T (x - mean)
Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::VectorXd& x);
// Column-wise projection of a D x N matrix.
Eigen::MatrixXd project_pca(const PcaModel& model, const Eigen::MatrixXd& xs);

Eigen::VectorXd reconstruct_pca(const PcaModel& model, const Eigen::VectorXd& code);

// Column-major flattening of an H x W image.
Eigen::VectorXd vectorize_image(const Eigen::MatrixXd& image);
Eigen::MatrixXd reshape_image(const Eigen::VectorXd& v, Eigen::Index rows,
                              Eigen::Index cols);

// <prefix>.pca.mat holds [mean | basis] (D x (d+1)); <prefix>.pca.json the
// dimensions, variances and sign-convention tag.
void save_pca(const std::filesystem::path& prefix, const PcaModel& model);
PcaModel load_pca(const std::filesystem::path& prefix);

}  // namespace collabrep
