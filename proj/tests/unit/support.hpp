#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "collabrep/dictionary.hpp"
#include "collabrep/errors.hpp"
#include "collabrep/rng.hpp"

namespace testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::uint64_t seed) {
  collabrep::Rng rng(seed);
  return rng.normal_matrix(rows, cols);
}

inline Eigen::VectorXd random_vector(Eigen::Index size, std::uint64_t seed) {
  collabrep::Rng rng(seed);
  return rng.normal_vector(size);
}

// Columns split into `classes` consecutive blocks labelled "k0", "k1", ...
inline collabrep::Dictionary blocked_dictionary(const Eigen::MatrixXd& raw, int classes) {
  std::vector<collabrep::Label> labels;
  const auto per = raw.cols() / classes;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    labels.push_back("k" + std::to_string(std::min<Eigen::Index>(j / per, classes - 1)));
  }
  return collabrep::Dictionary::from_matrix(raw, labels);
}

// Long-double Gaussian elimination with partial pivoting.
inline Eigen::VectorXd solve_ld(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Mat al = a.cast<long double>();
  Vec bl = b.cast<long double>();
  Vec x = al.fullPivLu().solve(bl);
  return x.cast<double>();
}

inline Eigen::VectorXd ridge_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    double lambda) {
  Eigen::MatrixXd g = x.transpose() * x;
  g.diagonal().array() += lambda;
  return solve_ld(g, x.transpose() * y);
}

template <class Fn>
void expect_error(collabrep::ErrorCode code, Fn&& fn) {
  bool thrown = false;
  try {
    fn();
  } catch (const collabrep::Error& e) {
    thrown = true;
    CHECK(e.code() == code);
  }
  CHECK(thrown);
}

}  // namespace testing
