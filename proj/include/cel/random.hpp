#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cel {

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// Bit-stable across standard libraries, unlike uniform_real_distribution.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) via multiply-shift.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  using u128 = unsigned __int128;
  return static_cast<std::size_t>((static_cast<u128>(rng()) * static_cast<u128>(n)) >> 64);
}

// Fisher-Yates with explicit draws so shuffles replay identically for a seed.
template <class T>
void shuffle_values(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
  }
}

}  // namespace cel
