#pragma once

#include <cstdint>
#include <random>

namespace uglad {

using Rng = std::mt19937_64;

/// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
  Parameters = 1,
  CvSplit = 2,
  Folds = 3,
  TaskSplit = 4,
  Graph = 5,
  Samples = 6,
  Dropout = 7,
  Baseline = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (base seed, purpose, index).
inline std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

}  // namespace uglad
