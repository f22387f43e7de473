#pragma once

// Seeded random numbers with a bit-exact sequence on every platform.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// conversions to doubles, bounded integers and normals live here.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace collabrep {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index size);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  // `count` distinct indices from [0, population), in selection order.
  std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                      std::size_t count);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for item `index` of a batch; independent of processing order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

}  // namespace collabrep
