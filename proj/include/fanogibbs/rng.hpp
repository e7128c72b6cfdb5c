#pragma once

#include <cstdint>
#include <random>

namespace fanogibbs {

// Deterministic stream splitting: every MC batch, chain or ray owns the
// stream keyed by (master seed, stream index). Reductions over streams run
// in a fixed order, so results are reproducible bit-for-bit regardless of
// the thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(0x5851f42d4c957f2dULL * (stream + 1)));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream = 0) {
  return std::mt19937_64(stream_seed(master, stream));
}

}  // namespace fanogibbs
