#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "collabrep/dictionary.hpp"

namespace collabrep {

enum class Split { Train, Test };

struct Dataset {
  Eigen::MatrixXd features;  // m x N, one sample per column
  std::vector<Label> labels;
  std::vector<Split> split;
  nlohmann::json provenance = nlohmann::json::object();
  // Image shape of one column (rows x cols = m); (m, 1) for plain vectors.
  Eigen::Index image_rows = 0;
  Eigen::Index image_cols = 0;

  Eigen::Index dim() const { return features.rows(); }
  Eigen::Index size() const { return features.cols(); }

  // Distinct labels in first-appearance order.
  std::vector<Label> classes() const;
  std::vector<Eigen::Index> indices(Split which) const;
  // Columns of one split as a standalone dataset (all marked Train).
  Dataset select(Split which) const;
  // Columns whose label is (or is not) in `labels`.
  Dataset filter_labels(std::span<const Label> labels, bool keep) const;

  // Split is a partition and every test class appears in training.
  void validate(bool allow_unseen_test_classes = false) const;
};

enum class Layout { ClassDirs, MatrixFile };

struct IngestOptions {
  // Class-directory layout only: when set, this many images per class
  // (chosen with `seed`) go to training and the rest to test. Otherwise a
  // "split.json" at the root ({"<class>/<file>": "train"|"test"}) is used
  // when present, else every image is training data.
  std::optional<int> train_per_class;
  std::uint64_t seed = 0;
};

// Class-directory layout: one subdirectory per class holding 8-bit binary
// PGM images of identical size; columns ordered by class name, then file
// name. Matrix-file layout: `path` is a harness matrix (or .csv) file with
// one sample per column and a JSON sidecar (same stem, ".json") holding
// "labels", optional "split" and "image_shape".
Dataset ingest_dataset(const std::filesystem::path& path, Layout layout,
                       const IngestOptions& options = {});

// Writes the matrix-file layout: <prefix>.mat + <prefix>.json.
void save_dataset(const std::filesystem::path& prefix, const Dataset& data);
// Reads what save_dataset wrote.
Dataset load_dataset(const std::filesystem::path& prefix);

// K classes, each a random subspace of R^m spanned by an orthonormal basis
// B_k. A sample is B_k g + noise * n with g, n standard normal. With
// overlap > 0 every basis is drawn from sqrt(overlap) * S G_k +
// sqrt(1 - overlap) * R_k for one shared subspace S, making classes
// correlated. Imposter classes have test samples only.
struct SyntheticSpec {
  int classes = 20;
  int subspace_dim = 5;
  int ambient_dim = 100;
  int train_per_class = 20;
  int test_per_class = 10;
  double noise = 0.05;
  double overlap = 0.0;
  int imposter_classes = 0;
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_from_json(const nlohmann::json& j);

}  // namespace collabrep
