#pragma once

#include <cstdint>

namespace quadrics::dataset {

/// SplitMix64: output i is a fixed bit mix of seed + (i + 1) * golden gamma,
/// so streams are reproducible on every platform. Doubles use the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] (inclusive); multiply-shift, no modulo bias
  /// beyond 2^-64.
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo) + 1);
    return lo + static_cast<std::int64_t>((span * next()) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace quadrics::dataset
