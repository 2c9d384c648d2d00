#pragma once

#include <cstdint>

namespace protes {

// 64-bit finalizer from SplitMix64 (Steele, Lea & Flood). Also used as a
// stateless mixer when deriving stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

// Key of the salt-th substream of a seed. Substreams are how every sample,
// iteration and initializer gets its own deterministic stream, so results
// do not depend on evaluation order or thread count.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t salt) {
  return mix64(seed + kGolden64 * (salt + 1));
}

// SplitMix64 generator. Small state, counter-based, bitwise reproducible
// across platforms.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next_u64() {
    state_ += kGolden64;
    return mix64(state_);
  }

  // Uniform on the open interval (0,1): midpoints of 2^53 equal cells,
  // never exactly 0 or 1.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n >= 1. Lemire's multiply-shift; the
  // O(n/2^64) bias is irrelevant at the sizes used here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace protes
