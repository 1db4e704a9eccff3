#pragma once

#include <cstdint>
#include <random>

namespace hrsi {

/// Independent random streams derived from one user seed.
enum class RngStream : std::uint32_t {
  init = 1,
  truth = 2,
  noise = 3,
  misc = 4,
};

/// mt19937_64 seeded through std::seed_seq from (seed, stream), so each
/// purpose gets its own reproducible sequence.
inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace hrsi
