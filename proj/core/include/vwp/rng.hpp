#pragma once

#include <cstdint>
#include <random>

namespace vwp {

/// Seeded generator with platform-independent conversions. std::*_distribution
/// output differs between standard libraries, so the conversions live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  std::uint64_t next() { return engine_(); }

  /// Derives an independent stream for a (seed, salt) pair.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vwp
