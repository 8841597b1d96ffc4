#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gridfr {

/// Counter-based generator: draw k of stream `seed` is splitmix64(seed + (k+1)*golden).
///
/// Each draw is a pure function of (seed, counter), so sequences are identical
/// on every platform and any draw can be recomputed without replaying the stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t counter) noexcept {
    return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next() noexcept { return at(seed_, counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (consumes two draws, no caching).
  double normal() noexcept {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace gridfr
