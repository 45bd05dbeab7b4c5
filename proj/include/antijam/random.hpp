#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace antijam {

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the helpers below keep sampled values identical across
// standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform real in [0, 1) with 53 bits of randomness.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string rng_state(const Rng& rng);
Rng rng_from_state(const std::string& state);

}  // namespace antijam
