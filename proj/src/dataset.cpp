#include "collabrep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <Eigen/QR>

#include "collabrep/errors.hpp"
#include "collabrep/features.hpp"
#include "collabrep/matrix_io.hpp"
#include "collabrep/rng.hpp"

namespace fs = std::filesystem;

namespace collabrep {
namespace {

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  fail(ErrorCode::MalformedMatrix, "split entries must be 'train' or 'test', got '" + s + "'");
}

nlohmann::json read_json_file(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::MissingPath, "no such file: " + path.string());
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, path.string() + ": " + e.what());
  }
}

Eigen::MatrixXd orthonormal_basis(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::MatrixXd g = rng.normal_matrix(rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

std::string class_name(const char* prefix, int index, int total) {
  const int width = std::max(2, static_cast<int>(std::to_string(std::max(total - 1, 0)).size()));
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < width)
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

Dataset ingest_class_dirs(const fs::path& root, const IngestOptions& options) {
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) fail(ErrorCode::EmptyInput, root.string() + " has no class directories");

  std::map<std::string, std::string> split_map;
  if (fs::exists(root / "split.json")) {
    for (const auto& [k, v] : read_json_file(root / "split.json").items())
      split_map[k] = v.get<std::string>();
  }

  Dataset data;
  std::vector<Eigen::VectorXd> columns;
  Rng rng(options.seed);
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".pgm")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;
    const std::string label = dir.filename().string();

    std::vector<Split> splits(files.size(), Split::Train);
    if (options.train_per_class) {
      const auto train = static_cast<std::size_t>(std::max(0, *options.train_per_class));
      if (train > files.size())
        fail(ErrorCode::ConfigInvalid, "class " + label + " has only " +
                                           std::to_string(files.size()) + " images");
      std::fill(splits.begin(), splits.end(), Split::Test);
      for (std::size_t idx : rng.sample_without_replacement(files.size(), train))
        splits[idx] = Split::Train;
    } else if (!split_map.empty()) {
      for (std::size_t i = 0; i < files.size(); ++i) {
        const auto key = label + "/" + files[i].filename().string();
        if (auto it = split_map.find(key); it != split_map.end()) splits[i] = parse_split(it->second);
      }
    }

    for (std::size_t i = 0; i < files.size(); ++i) {
      const Eigen::MatrixXd image = read_pgm(files[i]);
      if (data.image_rows == 0) {
        data.image_rows = image.rows();
        data.image_cols = image.cols();
      } else if (image.rows() != data.image_rows || image.cols() != data.image_cols) {
        fail(ErrorCode::MixedImageSizes,
             files[i].string() + " is " + std::to_string(image.rows()) + "x" +
                 std::to_string(image.cols()) + ", expected " +
                 std::to_string(data.image_rows) + "x" + std::to_string(data.image_cols));
      }
      columns.push_back(vectorize_image(image));
      data.labels.push_back(label);
      data.split.push_back(splits[i]);
    }
  }
  if (columns.empty()) fail(ErrorCode::EmptyInput, root.string() + " holds no PGM images");

  data.features.resize(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    data.features.col(static_cast<Eigen::Index>(j)) = columns[j];
  data.provenance = {{"source", fs::absolute(root).string()},
                     {"layout", "class_dirs"},
                     {"resolution", {data.image_rows, data.image_cols}},
                     {"feature_pipeline", "raw pixels, column-major"}};
  if (options.train_per_class)
    data.provenance["split_rule"] = {{"train_per_class", *options.train_per_class},
                                     {"seed", options.seed}};
  return data;
}

Dataset ingest_matrix_file(const fs::path& path) {
  Dataset data;
  data.features = load_any_matrix(path);
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  const auto j = read_json_file(sidecar);
  try {
    data.labels = j.at("labels").get<std::vector<Label>>();
    if (j.contains("split")) {
      for (const auto& s : j["split"]) data.split.push_back(parse_split(s.get<std::string>()));
    } else {
      data.split.assign(data.labels.size(), Split::Train);
    }
    if (j.contains("image_shape")) {
      data.image_rows = j["image_shape"].at(0).get<Eigen::Index>();
      data.image_cols = j["image_shape"].at(1).get<Eigen::Index>();
    }
    data.provenance = j.value("provenance", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, sidecar.string() + ": " + e.what());
  }
  if (static_cast<Eigen::Index>(data.labels.size()) != data.features.cols() ||
      data.split.size() != data.labels.size())
    fail(ErrorCode::MalformedMatrix, "sidecar label/split count differs from matrix columns");
  if (data.image_rows == 0) {
    data.image_rows = data.features.rows();
    data.image_cols = 1;
  }
  if (data.image_rows * data.image_cols != data.features.rows())
    fail(ErrorCode::MalformedMatrix, "image_shape does not match the feature dimension");
  if (!data.provenance.contains("source"))
    data.provenance["source"] = fs::absolute(path).string();
  data.provenance["layout"] = "matrix_file";
  return data;
}

}  // namespace

std::vector<Label> Dataset::classes() const {
  std::vector<Label> out;
  std::set<Label> seen;
  for (const auto& l : labels)
    if (seen.insert(l).second) out.push_back(l);
  return out;
}

std::vector<Eigen::Index> Dataset::indices(Split which) const {
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < split.size(); ++j)
    if (split[j] == which) out.push_back(static_cast<Eigen::Index>(j));
  return out;
}

Dataset Dataset::select(Split which) const {
  const auto idx = indices(which);
  Dataset out;
  out.features.resize(dim(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.features.col(static_cast<Eigen::Index>(j)) = features.col(idx[j]);
    out.labels.push_back(labels[static_cast<std::size_t>(idx[j])]);
  }
  out.split.assign(idx.size(), Split::Train);
  out.provenance = provenance;
  out.provenance["selected_split"] = split_name(which);
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  return out;
}

Dataset Dataset::filter_labels(std::span<const Label> keep_labels, bool keep) const {
  const std::set<Label> wanted(keep_labels.begin(), keep_labels.end());
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (wanted.contains(labels[j]) == keep) idx.push_back(static_cast<Eigen::Index>(j));
  Dataset out;
  out.features.resize(dim(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.features.col(static_cast<Eigen::Index>(j)) = features.col(idx[j]);
    out.labels.push_back(labels[static_cast<std::size_t>(idx[j])]);
    out.split.push_back(split[static_cast<std::size_t>(idx[j])]);
  }
  out.provenance = provenance;
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  return out;
}

void Dataset::validate(bool allow_unseen_test_classes) const {
  if (static_cast<Eigen::Index>(labels.size()) != size() || split.size() != labels.size())
    fail(ErrorCode::ConfigInvalid, "dataset labels/split do not match its columns");
  if (allow_unseen_test_classes) return;
  std::set<Label> train;
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (split[j] == Split::Train) train.insert(labels[j]);
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (split[j] == Split::Test && !train.contains(labels[j]))
      fail(ErrorCode::ConfigInvalid, "test class '" + labels[j] + "' has no training samples");
}

Dataset ingest_dataset(const fs::path& path, Layout layout, const IngestOptions& options) {
  if (!fs::exists(path)) fail(ErrorCode::MissingPath, "no such path: " + path.string());
  Dataset data = layout == Layout::ClassDirs ? ingest_class_dirs(path, options)
                                             : ingest_matrix_file(path);
  data.validate(true);
  return data;
}

void save_dataset(const fs::path& prefix, const Dataset& data) {
  fs::path mat = prefix;
  mat += ".mat";
  save_matrix(mat, data.features);
  nlohmann::json j;
  j["format"] = "collabrep.dataset/1";
  j["labels"] = data.labels;
  auto& split = j["split"] = nlohmann::json::array();
  for (Split s : data.split) split.push_back(split_name(s));
  j["image_shape"] = {data.image_rows, data.image_cols};
  j["provenance"] = data.provenance;
  fs::path side = prefix;
  side += ".json";
  std::ofstream out(side, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + side.string());
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& prefix) {
  fs::path mat = prefix;
  mat += ".mat";
  return ingest_dataset(mat, Layout::MatrixFile);
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.subspace_dim < 1 || spec.ambient_dim < spec.subspace_dim ||
      spec.train_per_class < 1 || spec.test_per_class < 0 || spec.imposter_classes < 0 ||
      !(spec.noise >= 0.0) || !(spec.overlap >= 0.0 && spec.overlap < 1.0))
    fail(ErrorCode::ConfigInvalid, "invalid synthetic dataset parameters");

  const Eigen::Index m = spec.ambient_dim;
  const Eigen::Index d = spec.subspace_dim;
  Rng rng(spec.seed);
  const Eigen::MatrixXd shared = orthonormal_basis(rng, m, d);

  const int total_classes = spec.classes + spec.imposter_classes;
  std::vector<Eigen::VectorXd> columns;
  Dataset data;
  for (int k = 0; k < total_classes; ++k) {
    const bool imposter = k >= spec.classes;
    const std::string label = imposter
                                  ? class_name("imp", k - spec.classes, spec.imposter_classes)
                                  : class_name("c", k, spec.classes);
    Eigen::MatrixXd basis = orthonormal_basis(rng, m, d);
    if (spec.overlap > 0.0) {
      const Eigen::MatrixXd rotation = orthonormal_basis(rng, d, d);
      const Eigen::MatrixXd mixed =
          std::sqrt(spec.overlap) * shared * rotation + std::sqrt(1.0 - spec.overlap) * basis;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(mixed);
      basis = qr.householderQ() * Eigen::MatrixXd::Identity(m, d);
    }
    const int train = imposter ? 0 : spec.train_per_class;
    for (int i = 0; i < train + spec.test_per_class; ++i) {
      columns.push_back(basis * rng.normal_vector(d) + spec.noise * rng.normal_vector(m));
      data.labels.push_back(label);
      data.split.push_back(i < train ? Split::Train : Split::Test);
    }
  }
  data.features.resize(m, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    data.features.col(static_cast<Eigen::Index>(j)) = columns[j];
  data.image_rows = m;
  data.image_cols = 1;
  data.provenance = {{"source", "synthetic"}, {"generator", to_json(spec)}};
  return data;
}

nlohmann::json to_json(const SyntheticSpec& spec) {
  return {{"classes", spec.classes},
          {"subspace_dim", spec.subspace_dim},
          {"ambient_dim", spec.ambient_dim},
          {"train_per_class", spec.train_per_class},
          {"test_per_class", spec.test_per_class},
          {"noise", spec.noise},
          {"overlap", spec.overlap},
          {"imposter_classes", spec.imposter_classes},
          {"seed", spec.seed}};
}

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    s.classes = j.value("classes", s.classes);
    s.subspace_dim = j.value("subspace_dim", s.subspace_dim);
    s.ambient_dim = j.value("ambient_dim", s.ambient_dim);
    s.train_per_class = j.value("train_per_class", s.train_per_class);
    s.test_per_class = j.value("test_per_class", s.test_per_class);
    s.noise = j.value("noise", s.noise);
    s.overlap = j.value("overlap", s.overlap);
    s.imposter_classes = j.value("imposter_classes", s.imposter_classes);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("synthetic spec: ") + e.what());
  }
  return s;
}

}  // namespace collabrep
