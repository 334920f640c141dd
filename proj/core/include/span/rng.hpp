#pragma once

#include <cstdint>

namespace span {

/// Deterministic, platform-independent random generator.
///
/// Core stream: xoshiro256++ seeded through splitmix64, so the same 64-bit
/// seed yields the same draw sequence on every platform. Uniform doubles use
/// the top 53 bits of a draw; normals use the Marsaglia polar method (sqrt
/// and log only). std::random engines/distributions are deliberately not
/// used because their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive (modulo reduction; the bias is
  /// negligible for the small ranges used here and keeps the stream simple).
  int uniform_int(int lo, int hi);
  /// Standard normal scaled to mean/sigma.
  double normal(double mean = 0.0, double sigma = 1.0);
  /// True with probability p.
  bool bernoulli(double p);

  /// Stateless seed combinator for deriving per-item seeds from a stream
  /// seed, e.g. mix(dataset_seed, sample_index).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace span
