#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "edfvae/types.hpp"

namespace edfvae {

/// Seeded random stream on top of std::mt19937_64.
///
/// All derived draws (uniform, normal, integer) are generated by explicit
/// formulas in this class rather than by std::*_distribution, so a given
/// seed reproduces the same stream on every standard-conforming build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream derived from this stream's seed.
  Rng split(std::uint64_t stream) const;

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_int(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace edfvae
