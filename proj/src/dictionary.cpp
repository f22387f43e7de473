#include "collabrep/dictionary.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "collabrep/errors.hpp"
#include "collabrep/matrix_io.hpp"

namespace collabrep {
namespace {

constexpr double kZeroNorm = 1e-12;

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::uint64_t compute_fingerprint(const Eigen::MatrixXd& data,
                                  const std::vector<ClassRange>& classes) {
  Fnv1a h;
  h.u64(static_cast<std::uint64_t>(data.rows()));
  h.u64(static_cast<std::uint64_t>(data.cols()));
  for (Eigen::Index j = 0; j < data.cols(); ++j)
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      h.u64(std::bit_cast<std::uint64_t>(data(i, j)));
  for (const auto& c : classes) {
    h.str(c.label);
    h.u64(static_cast<std::uint64_t>(c.begin));
    h.u64(static_cast<std::uint64_t>(c.end));
  }
  return h.value();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::MissingPath, "no such file: " + path.string());
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::filesystem::path with_suffix(std::filesystem::path p, const char* suffix) {
  p += suffix;
  return p;
}

}  // namespace

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out = raw;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (!(norm >= kZeroNorm))
      fail(ErrorCode::ZeroColumn,
           "column " + std::to_string(j) + " has norm below 1e-12");
    out.col(j) /= norm;
  }
  return out;
}

Dictionary::Dictionary(Eigen::MatrixXd data, std::vector<ClassRange> classes)
    : data_(std::move(data)), classes_(std::move(classes)) {
  fingerprint_ = compute_fingerprint(data_, classes_);
}

Dictionary Dictionary::from_matrix(const Eigen::MatrixXd& raw,
                                   std::span<const Label> labels) {
  if (raw.cols() == 0 || labels.empty())
    fail(ErrorCode::EmptyInput, "dictionary needs at least one sample");
  if (raw.rows() == 0) fail(ErrorCode::DimensionMismatch, "feature dimension is zero");
  if (static_cast<std::size_t>(raw.cols()) != labels.size())
    fail(ErrorCode::DimensionMismatch, "one label per column required");

  std::vector<Label> order;
  std::unordered_map<Label, std::vector<Eigen::Index>> members;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto [it, inserted] = members.try_emplace(labels[j]);
    if (inserted) order.push_back(labels[j]);
    it->second.push_back(static_cast<Eigen::Index>(j));
  }

  Eigen::MatrixXd grouped(raw.rows(), raw.cols());
  std::vector<ClassRange> classes;
  classes.reserve(order.size());
  Eigen::Index col = 0;
  for (const auto& label : order) {
    const Eigen::Index begin = col;
    for (Eigen::Index src : members[label]) grouped.col(col++) = raw.col(src);
    classes.push_back({label, begin, col});
  }
  return Dictionary(normalize_columns(grouped), std::move(classes));
}

Dictionary Dictionary::from_samples(std::span<const Sample> samples) {
  if (samples.empty())
    fail(ErrorCode::EmptyInput, "dictionary needs at least one sample");
  const Eigen::Index m = samples.front().features.size();
  Eigen::MatrixXd raw(m, static_cast<Eigen::Index>(samples.size()));
  std::vector<Label> labels;
  labels.reserve(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].features.size() != m)
      fail(ErrorCode::DimensionMismatch,
           "sample " + std::to_string(j) + " has dimension " +
               std::to_string(samples[j].features.size()) + ", expected " +
               std::to_string(m));
    raw.col(static_cast<Eigen::Index>(j)) = samples[j].features;
    labels.push_back(samples[j].label);
  }
  return from_matrix(raw, labels);
}

Dictionary Dictionary::restore(Eigen::MatrixXd data, std::vector<ClassRange> classes) {
  if (data.rows() == 0 || data.cols() == 0 || classes.empty())
    fail(ErrorCode::EmptyInput, "stored dictionary is empty");
  Eigen::Index expected = 0;
  for (const auto& c : classes) {
    if (c.begin != expected || c.end <= c.begin)
      fail(ErrorCode::MalformedMatrix, "class ranges do not partition the columns");
    expected = c.end;
  }
  if (expected != data.cols())
    fail(ErrorCode::MalformedMatrix, "class ranges do not cover all columns");
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (std::abs(data.col(j).norm() - 1.0) > 1e-12)
      fail(ErrorCode::MalformedMatrix, "stored column is not unit norm");
  }
  return Dictionary(std::move(data), std::move(classes));
}

std::optional<std::size_t> Dictionary::find_class(std::string_view label) const {
  for (std::size_t k = 0; k < classes_.size(); ++k)
    if (classes_[k].label == label) return k;
  return std::nullopt;
}

std::size_t Dictionary::class_index(std::string_view label) const {
  if (auto k = find_class(label)) return *k;
  fail(ErrorCode::UnknownClass, "unknown class '" + std::string(label) + "'");
}

std::vector<Label> Dictionary::column_labels() const {
  std::vector<Label> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (const auto& c : classes_)
    for (Eigen::Index j = c.begin; j < c.end; ++j) out.push_back(c.label);
  return out;
}

std::vector<Sample> Dictionary::samples() const {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (const auto& c : classes_)
    for (Eigen::Index j = c.begin; j < c.end; ++j)
      out.push_back({data_.col(j), c.label});
  return out;
}

Dictionary build_dictionary(std::span<const Sample> samples) {
  return Dictionary::from_samples(samples);
}

Eigen::VectorXd class_coefficients(const Dictionary& dict,
                                   const Eigen::VectorXd& alpha,
                                   std::string_view label) {
  if (alpha.size() != dict.size())
    fail(ErrorCode::DimensionMismatch, "coefficient length differs from dictionary size");
  const auto& r = dict.range(label);
  return alpha.segment(r.begin, r.size());
}

double default_lambda(Eigen::Index n) {
  return 0.001 * static_cast<double>(n) / 700.0;
}

Projector Projector::restore(Eigen::MatrixXd matrix, double lambda,
                             std::uint64_t fingerprint, bool auto_lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NonPositiveLambda, "lambda must be positive");
  return Projector(std::move(matrix), lambda, fingerprint, auto_lambda);
}

Eigen::VectorXd Projector::apply(const Eigen::VectorXd& y) const {
  if (y.size() != matrix_.cols())
    fail(ErrorCode::DimensionMismatch, "query dimension differs from projector");
  return matrix_ * y;
}

Projector build_projector(const Dictionary& dict, double lambda) {
  if (!(lambda > 0.0))
    fail(ErrorCode::NonPositiveLambda, "lambda must be positive");
  const Eigen::MatrixXd& x = dict.data();
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  Eigen::MatrixXd p;
  if (llt.info() == Eigen::Success) {
    p = llt.solve(x.transpose());
  } else {
    // Only reachable when lambda is swamped by rounding in X^T X.
    p = gram.ldlt().solve(x.transpose());
  }
  return Projector(std::move(p), lambda, dict.fingerprint(), false);
}

Projector build_default_projector(const Dictionary& dict) {
  Projector p = build_projector(dict, default_lambda(dict.size()));
  p.auto_lambda_ = true;
  return p;
}

Enrollment enroll(const Dictionary& dict, const Projector& projector,
                  std::span<const Sample> new_samples) {
  if (projector.fingerprint() != dict.fingerprint())
    fail(ErrorCode::FingerprintMismatch, "projector was built from another dictionary");
  if (new_samples.empty()) return {dict, projector};
  for (const auto& s : new_samples)
    if (s.features.size() != dict.dim())
      fail(ErrorCode::DimensionMismatch, "enrolled sample dimension differs");

  std::vector<Sample> all = dict.samples();
  all.insert(all.end(), new_samples.begin(), new_samples.end());
  Dictionary updated = build_dictionary(all);
  Projector p = projector.auto_lambda()
                    ? build_default_projector(updated)
                    : build_projector(updated, projector.lambda());
  return {std::move(updated), std::move(p)};
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fingerprint));
  return buf;
}

std::uint64_t parse_fingerprint_hex(std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorCode::MalformedMatrix, "bad fingerprint '" + std::string(text) + "'");
  return v;
}

void save_dictionary(const std::filesystem::path& prefix, const Dictionary& dict) {
  save_matrix(with_suffix(prefix, ".mat"), dict.data());
  nlohmann::json j;
  j["format"] = "collabrep.dictionary/1";
  j["rows"] = dict.dim();
  j["cols"] = dict.size();
  j["fingerprint"] = fingerprint_hex(dict.fingerprint());
  j["labels"] = dict.column_labels();
  auto& ranges = j["class_ranges"] = nlohmann::json::array();
  for (const auto& c : dict.classes())
    ranges.push_back({{"label", c.label}, {"begin", c.begin}, {"end", c.end}});
  write_json(with_suffix(prefix, ".json"), j);
}

Dictionary load_dictionary(const std::filesystem::path& prefix) {
  Eigen::MatrixXd data = load_matrix(with_suffix(prefix, ".mat"));
  const auto j = read_json(with_suffix(prefix, ".json"));
  std::vector<ClassRange> classes;
  try {
    for (const auto& r : j.at("class_ranges"))
      classes.push_back({r.at("label").get<std::string>(),
                         r.at("begin").get<Eigen::Index>(),
                         r.at("end").get<Eigen::Index>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, std::string("dictionary sidecar: ") + e.what());
  }
  Dictionary dict = Dictionary::restore(std::move(data), std::move(classes));
  if (j.contains("fingerprint") &&
      parse_fingerprint_hex(j["fingerprint"].get<std::string>()) != dict.fingerprint())
    fail(ErrorCode::FingerprintMismatch, "dictionary sidecar fingerprint mismatch");
  return dict;
}

void save_projector(const std::filesystem::path& prefix, const Projector& projector) {
  save_matrix(with_suffix(prefix, ".projector.mat"), projector.matrix());
  nlohmann::json j;
  j["format"] = "collabrep.projector/1";
  j["lambda"] = projector.lambda();
  j["auto_lambda"] = projector.auto_lambda();
  j["dictionary_fingerprint"] = fingerprint_hex(projector.fingerprint());
  write_json(with_suffix(prefix, ".projector.json"), j);
}

Projector load_projector(const std::filesystem::path& prefix) {
  Eigen::MatrixXd p = load_matrix(with_suffix(prefix, ".projector.mat"));
  const auto j = read_json(with_suffix(prefix, ".projector.json"));
  try {
    return Projector::restore(
        std::move(p), j.at("lambda").get<double>(),
        parse_fingerprint_hex(j.at("dictionary_fingerprint").get<std::string>()),
        j.value("auto_lambda", false));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedMatrix, std::string("projector sidecar: ") + e.what());
  }
}

}  // namespace collabrep
