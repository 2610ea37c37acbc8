#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mbp {

/// mt19937_64 stream with platform-independent derived draws. The standard
/// distribution classes are implementation-defined, so uniform reals and
/// bounded integers are computed here from the raw 64-bit output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double prob) { return uniform() < prob; }

  /// Standard normal via Box-Muller (one draw per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic child seed from a master seed and a list of coordinates.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) noexcept;

}  // namespace mbp
