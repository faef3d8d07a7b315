#pragma once

#include <cstdint>
#include <string_view>

#include "manipkit/grid.hpp"

namespace manipkit {

/// splitmix64 step. Counter-based and platform-stable, unlike the
/// distributions in <random>.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  /// Unbiased uniform draw in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform_double() { return (next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

/// Order-sensitive hash of a pixel list; keys the seeded draws so a
/// selection depends only on (seed, candidate set).
inline std::uint64_t pixel_set_hash(const std::vector<PixelCoord>& pixels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const PixelCoord& p : pixels) {
    const std::uint32_t xy[2] = {static_cast<std::uint32_t>(p.x),
                                 static_cast<std::uint32_t>(p.y)};
    h = fnv1a64(xy, sizeof(xy), h);
  }
  return h;
}

/// Uniform draw from a non-empty candidate list, keyed by (seed, set).
inline PixelCoord seeded_pick(const std::vector<PixelCoord>& candidates,
                              std::uint64_t seed) {
  SplitMix rng(hash_mix(seed, pixel_set_hash(candidates)));
  return candidates[rng.uniform_below(candidates.size())];
}

}  // namespace manipkit
