#pragma once

#include <cstdint>
#include <random>

namespace fobsm {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea and Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the independent substream `index` derived from a run seed:
/// seed XOR splitmix64(index). Used per dataset row, per layer and per epoch
/// so results never depend on evaluation order.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ splitmix64(index);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(substream_seed(seed, stream)));
}

/// Uniform double in [0, 1) from the top 53 bits of one draw. Unlike
/// std::uniform_real_distribution the mapping is fixed across standard
/// library implementations.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& engine, double lo, double hi) {
  return lo + (hi - lo) * uniform01(engine);
}

}  // namespace fobsm
