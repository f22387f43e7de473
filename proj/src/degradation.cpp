#include "collabrep/degradation.hpp"

#include <cmath>
#include <filesystem>

#include "collabrep/errors.hpp"
#include "collabrep/matrix_io.hpp"
#include "collabrep/rng.hpp"

namespace collabrep {
namespace {

void check_image(const Eigen::MatrixXd& image) {
  if (image.size() == 0) fail(ErrorCode::EmptyImage, "image has no pixels");
}

}  // namespace

void DegradationSpec::validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    fail(ErrorCode::BadFraction, "degradation fraction must lie in [0, 1]");
  if (kind == DegradationKind::BlockOcclusion) {
    if (!occluder) fail(ErrorCode::ConfigInvalid, "block occlusion needs an occluder image");
    if (!(fraction < 1.0))
      fail(ErrorCode::BadFraction, "occlusion fraction must lie in [0, 1)");
  }
  if (!(value_max >= value_min))
    fail(ErrorCode::ConfigInvalid, "corruption value range is empty");
}

Eigen::MatrixXd corrupt_pixels(const Eigen::MatrixXd& image, double fraction,
                               std::uint64_t seed, double value_min, double value_max) {
  check_image(image);
  if (!(fraction >= 0.0 && fraction <= 1.0))
    fail(ErrorCode::BadFraction, "corruption fraction must lie in [0, 1]");
  const auto total = static_cast<std::size_t>(image.size());
  const auto count = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(total)));

  Rng rng(seed);
  const auto where = rng.sample_without_replacement(total, std::min(count, total));
  Eigen::MatrixXd out = image;
  for (std::size_t idx : where)
    out.data()[idx] = rng.uniform(value_min, value_max);
  return out;
}

int occlusion_block_side(Eigen::Index rows, Eigen::Index cols, double fraction) {
  return static_cast<int>(
      std::floor(std::sqrt(fraction * static_cast<double>(rows * cols))));
}

Occlusion occlude_block(const Eigen::MatrixXd& image, double fraction,
                        const Eigen::MatrixXd& occluder, std::uint64_t seed) {
  check_image(image);
  if (!(fraction >= 0.0 && fraction < 1.0))
    fail(ErrorCode::BadFraction, "occlusion fraction must lie in [0, 1)");
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  const Eigen::Index s = occlusion_block_side(h, w, fraction);

  Occlusion out{image, BoolMatrix::Constant(h, w, false)};
  if (s == 0) return out;
  if (s > h || s > w)
    fail(ErrorCode::BadFraction, "a square block of side " + std::to_string(s) +
                                     " does not fit a " + std::to_string(h) + "x" +
                                     std::to_string(w) + " image");
  if (occluder.rows() < s || occluder.cols() < s)
    fail(ErrorCode::OccluderTooSmall, "occluder is smaller than the " +
                                          std::to_string(s) + "x" + std::to_string(s) +
                                          " block");

  Rng rng(seed);
  const auto top = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(h - s + 1)));
  const auto left = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w - s + 1)));
  for (Eigen::Index c = 0; c < s; ++c) {
    const auto src_c = static_cast<Eigen::Index>((c + 0.5) * occluder.cols() / s);
    for (Eigen::Index r = 0; r < s; ++r) {
      const auto src_r = static_cast<Eigen::Index>((r + 0.5) * occluder.rows() / s);
      out.image(top + r, left + c) = occluder(src_r, src_c);
      out.mask(top + r, left + c) = true;
    }
  }
  return out;
}

Eigen::MatrixXd apply_degradation(const Eigen::MatrixXd& image,
                                  const DegradationSpec& spec, std::uint64_t index) {
  spec.validate();
  const std::uint64_t seed = derive_seed(spec.seed, index);
  if (spec.kind == DegradationKind::PixelCorruption)
    return corrupt_pixels(image, spec.fraction, seed, spec.value_min, spec.value_max);
  return occlude_block(image, spec.fraction, *spec.occluder, seed).image;
}

nlohmann::json to_json(const DegradationSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind == DegradationKind::PixelCorruption ? "pixel_corruption"
                                                            : "block_occlusion";
  j["fraction"] = spec.fraction;
  j["seed"] = spec.seed;
  if (spec.kind == DegradationKind::PixelCorruption) {
    j["value_min"] = spec.value_min;
    j["value_max"] = spec.value_max;
  } else if (spec.occluder) {
    j["occluder_shape"] = {spec.occluder->rows(), spec.occluder->cols()};
  }
  return j;
}

DegradationSpec degradation_from_json(const nlohmann::json& j) {
  DegradationSpec spec;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "pixel_corruption") {
      spec.kind = DegradationKind::PixelCorruption;
    } else if (kind == "block_occlusion") {
      spec.kind = DegradationKind::BlockOcclusion;
    } else {
      fail(ErrorCode::ConfigInvalid, "unknown degradation kind '" + kind + "'");
    }
    spec.fraction = j.at("fraction").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.value_min = j.value("value_min", 0.0);
    spec.value_max = j.value("value_max", 255.0);
    if (j.contains("occluder_path")) {
      const std::filesystem::path p = j["occluder_path"].get<std::string>();
      spec.occluder = p.extension() == ".pgm" ? read_pgm(p) : load_any_matrix(p);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("degradation: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace collabrep
