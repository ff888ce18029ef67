#pragma once

#include <cstdint>
#include <random>

namespace spkg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for (master, counter, stream). Streams are independent for distinct
/// (counter, stream) pairs; the mapping is fixed so outputs are reproducible.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter, std::uint64_t stream = 0) {
  return mix64(mix64(master ^ mix64(counter)) + 0x632BE59BD9B4E019ULL * (stream + 1));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t counter = 0, std::uint64_t stream = 0) {
  return Rng(derive_seed(master, counter, stream));
}

}  // namespace spkg
