#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <utility>

namespace mvb {

/// Counter-free splitmix64 step. Portable and reproducible across platforms,
/// unlike the distributions in <random> whose algorithms are
/// implementation-defined.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Collapses a tuple of stream identifiers (seed, frame, view, keypoint, ...)
/// into one 64-bit seed. Every draw is a pure function of such a tuple, which
/// makes detections and Monte Carlo trials independent of evaluation order.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = 0x8D2F8F6A31C0ull;
  for (std::uint64_t p : parts) {
    s ^= splitmix64(p) + 0x9E3779B97F4A7C15ull + (s << 6) + (s >> 2);
    splitmix64(s);
  }
  return s;
}

/// Small deterministic generator built on splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Unbiased uniform integer in [0, n). Rejection sampling, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  /// One standard normal pair via Box-Muller.
  std::pair<double, double> gaussian_pair() {
    const double u1 = 1.0 - unit();  // (0, 1], keeps log finite
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::uint64_t state_;
};

}  // namespace mvb
