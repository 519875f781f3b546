#pragma once

#include <cstdint>
#include <string_view>

namespace relprompt {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen as the fold/sampling
// generator because its output sequence is fully specified by the seed and
// trivially portable: state += 0x9E3779B97F4A7C15, then the finalizer below.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform integer in [0, bound) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Seed for one generation attempt: hash64(fold seed, label, attempt).
inline std::uint64_t attempt_seed(std::uint64_t fold_seed, std::string_view label,
                                  std::uint64_t attempt) {
  std::uint64_t h = SplitMix64::mix(fold_seed + 0x9E3779B97F4A7C15ULL);
  h = SplitMix64::mix(h ^ fnv1a64(label));
  return SplitMix64::mix(h ^ (attempt + 0x9E3779B97F4A7C15ULL));
}

}  // namespace relprompt
