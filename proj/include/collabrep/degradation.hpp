#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>
#include <json.hpp>

namespace collabrep {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class DegradationKind { PixelCorruption, BlockOcclusion };

struct DegradationSpec {
  DegradationKind kind = DegradationKind::PixelCorruption;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  // Block source; required for occlusion, ignored otherwise.
  std::optional<Eigen::MatrixXd> occluder;
  // Range of the uniform replacement values for pixel corruption.
  double value_min = 0.0;
  double value_max = 255.0;

  void validate() const;
};

// Replaces exactly round(fraction * H * W) distinct pixels, chosen uniformly
// without replacement, by independent uniform draws on [value_min,
// value_max]. All other pixels are returned bit-identical.
Eigen::MatrixXd corrupt_pixels(const Eigen::MatrixXd& image, double fraction,
                               std::uint64_t seed, double value_min = 0.0,
                               double value_max = 255.0);

struct Occlusion {
  Eigen::MatrixXd image;
  BoolMatrix mask;  // true where the block replaced a pixel
};

// Pastes the occluder, resampled (nearest neighbour) to an s x s block with
// s = floor(sqrt(fraction * H * W)), at a uniformly drawn position.
// fraction must lie in [0, 1); the occluder must be at least s x s.
Occlusion occlude_block(const Eigen::MatrixXd& image, double fraction,
                        const Eigen::MatrixXd& occluder, std::uint64_t seed);

int occlusion_block_side(Eigen::Index rows, Eigen::Index cols, double fraction);

// Applies `spec` to item `index` of a batch with a per-item seed derived from
// (spec.seed, index), so batches can be processed in any order.
Eigen::MatrixXd apply_degradation(const Eigen::MatrixXd& image,
                                  const DegradationSpec& spec, std::uint64_t index);

nlohmann::json to_json(const DegradationSpec& spec);
// The occluder, when named in JSON by "occluder_path", is loaded from a PGM or
// matrix file.
DegradationSpec degradation_from_json(const nlohmann::json& j);

}  // namespace collabrep
