#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace collabrep {

using Label = std::string;

struct Sample {
  Eigen::VectorXd features;
  Label label;
};

// Half-open column range [begin, end) owned by one class.
struct ClassRange {
  Label label;
  Eigen::Index begin = 0;
  Eigen::Index end = 0;

  Eigen::Index size() const { return end - begin; }
};

// Divides every column by its Euclidean norm. Throws ZeroColumn when a
// column norm is below 1e-12.
Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& raw);

// Column-normalized training matrix partitioned into contiguous class blocks.
// Immutable once built.
class Dictionary {
 public:
  // Groups samples by label in first-appearance order, then normalizes.
  static Dictionary from_samples(std::span<const Sample> samples);

  // Same grouping for a raw m x n matrix with one label per column.
  static Dictionary from_matrix(const Eigen::MatrixXd& raw,
                                std::span<const Label> labels);

  // Reassembles a dictionary from stored parts; validates every invariant.
  static Dictionary restore(Eigen::MatrixXd data, std::vector<ClassRange> classes);

  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::Index dim() const { return data_.rows(); }
  Eigen::Index size() const { return data_.cols(); }
  std::size_t num_classes() const { return classes_.size(); }
  const std::vector<ClassRange>& classes() const { return classes_; }

  std::optional<std::size_t> find_class(std::string_view label) const;
  // Throws UnknownClass.
  std::size_t class_index(std::string_view label) const;
  const ClassRange& range(std::string_view label) const {
    return classes_[class_index(label)];
  }

  auto block(std::size_t k) const {
    return data_.middleCols(classes_[k].begin, classes_[k].size());
  }

  // Label of every column, in column order.
  std::vector<Label> column_labels() const;

  // Recovers the per-sample view (normalized columns).
  std::vector<Sample> samples() const;

  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  Dictionary(Eigen::MatrixXd data, std::vector<ClassRange> classes);

  Eigen::MatrixXd data_;
  std::vector<ClassRange> classes_;
  std::uint64_t fingerprint_ = 0;
};

Dictionary build_dictionary(std::span<const Sample> samples);

// Slice of a full coefficient vector belonging to `label`.
Eigen::VectorXd class_coefficients(const Dictionary& dict,
                                   const Eigen::VectorXd& alpha,
                                   std::string_view label);

// lambda = 0.001 * n / 700 for n training columns.
double default_lambda(Eigen::Index n);

// P = (X^T X + lambda I)^{-1} X^T, tied to the dictionary it came from.
class Projector {
 public:
  static Projector restore(Eigen::MatrixXd matrix, double lambda,
                           std::uint64_t fingerprint, bool auto_lambda);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double lambda() const { return lambda_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  // True when lambda came from default_lambda and tracks the column count.
  bool auto_lambda() const { return auto_lambda_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;

 private:
  friend Projector build_projector(const Dictionary&, double);
  friend Projector build_default_projector(const Dictionary&);

  Projector(Eigen::MatrixXd matrix, double lambda, std::uint64_t fingerprint,
            bool auto_lambda)
      : matrix_(std::move(matrix)),
        lambda_(lambda),
        fingerprint_(fingerprint),
        auto_lambda_(auto_lambda) {}

  Eigen::MatrixXd matrix_;
  double lambda_ = 0.0;
  std::uint64_t fingerprint_ = 0;
  bool auto_lambda_ = false;
};

// Throws NonPositiveLambda.
Projector build_projector(const Dictionary& dict, double lambda);
Projector build_default_projector(const Dictionary& dict);

struct Enrollment {
  Dictionary dictionary;
  Projector projector;
};

// Appends new samples (new classes, or extra samples for existing ones) and
// recomputes the projector. An auto-lambda projector is rebuilt with the
// default rule for the new column count; a fixed lambda is kept.
Enrollment enroll(const Dictionary& dict, const Projector& projector,
                  std::span<const Sample> new_samples);

std::string fingerprint_hex(std::uint64_t fingerprint);
std::uint64_t parse_fingerprint_hex(std::string_view text);

// <prefix>.mat holds the matrix, <prefix>.json the labels and class ranges.
void save_dictionary(const std::filesystem::path& prefix, const Dictionary& dict);
Dictionary load_dictionary(const std::filesystem::path& prefix);

// <prefix>.projector.mat / <prefix>.projector.json
void save_projector(const std::filesystem::path& prefix, const Projector& projector);
Projector load_projector(const std::filesystem::path& prefix);

}  // namespace collabrep
