#pragma once

#include <cstdint>

namespace dfjss {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based child seed: independent streams for (master, stream) pairs,
/// so any run or generation can be recreated on its own.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(mix64(master) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace dfjss
