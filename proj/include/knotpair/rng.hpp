#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace knotpair {

/// All randomness in the library flows through mt19937_64 plus the helpers
/// below. The standard pins the engine's output exactly, and we avoid
/// std::*_distribution (whose mappings are implementation-defined), so a seed
/// determines every draw bit-for-bit on any platform.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  assert(n > 0);
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return static_cast<std::size_t>(draw % bound);
}

/// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
  assert(lo <= hi);
  return lo + static_cast<int>(uniform_index(
                  rng, static_cast<std::size_t>(hi - lo) + 1));
}

/// Uniform double in [a, b).
inline double uniform_range(Rng& rng, double a, double b) {
  return a + (b - a) * uniform_unit(rng);
}

/// One N(0, sigma^2) draw via Box-Muller. Consumes two engine outputs.
inline double normal(Rng& rng, double sigma = 1.0) {
  const double u1 = 1.0 - uniform_unit(rng);  // (0, 1], keeps log finite
  const double u2 = uniform_unit(rng);
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

/// Fisher-Yates shuffle driven by uniform_index.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace knotpair
