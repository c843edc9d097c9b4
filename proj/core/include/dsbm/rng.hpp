#pragma once

#include <cstdint>
#include <random>

namespace dsbm {

using Rng = std::mt19937_64;

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `index` under `base`. Replicate r of an experiment uses
/// derive_seed(base_seed, r); sub-streams inside a replicate derive again.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection; bound > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

}  // namespace dsbm
