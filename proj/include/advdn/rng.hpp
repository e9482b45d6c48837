#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advdn {

/// Project-wide random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms to the vendor:
///   - uniform(): top 53 bits of one engine draw, scaled by 2^-53.
///   - normal(): Box-Muller on two uniform() draws, both outputs used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named stochastic step under a parent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace advdn
