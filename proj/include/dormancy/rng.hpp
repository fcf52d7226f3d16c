#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dormancy {

using Rng = std::mt19937_64;

/// Independent stream for replica `replica` of a run seeded with `base`.
inline Rng replica_rng(std::uint64_t base, std::uint64_t replica) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
  return Rng(seq);
}

/// Uniform draw in (0, 1]; safe as the argument of a logarithm.
inline double open_uniform(Rng& rng) {
  // top 53 bits; (k + 1) / 2^53 lies in (0, 1]
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) { return -std::log(open_uniform(rng)) / rate; }

}  // namespace dormancy
