#pragma once

#include <cstdint>
#include <random>

namespace photos {

/// Seeded random stream with fixed bit-level output.
///
/// std::mt19937_64 has a standard-mandated sequence, but the library
/// distributions (normal, uniform_real) are implementation-defined, so the
/// mappings here are spelled out explicitly. Every reproducibility guarantee
/// in the toolkit rests on this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (caches the second variate).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace photos
