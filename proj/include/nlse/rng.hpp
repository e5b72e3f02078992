#pragma once

#include <cstdint>
#include <random>

namespace nlse {

/// 64-bit finalizer from the SplitMix64 generator.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using RandomStream = std::mt19937_64;

/// Independent stream for sample `index` of a run seeded with `master_seed`.
inline RandomStream sample_stream(std::uint64_t master_seed,
                                  std::uint64_t index) {
  return RandomStream(splitmix64(master_seed ^ index));
}

/// Unbiased integer in [0, bound) by rejection; portable across standard
/// libraries, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(RandomStream& rng, std::uint64_t bound) {
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} / bound) * bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace nlse
