#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rrm {

// SplitMix64 finalizer. Decorrelates seeds derived from small integers.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ mix64(v));
}

// FNV-1a over bytes, finalized with mix64. Stable across platforms.
inline std::uint64_t hash_str(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(mix64(seed));
}

// Uniform draw in [0,1) from a single hash, for stable per-record coins.
inline double coin_from_hash(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace rrm
