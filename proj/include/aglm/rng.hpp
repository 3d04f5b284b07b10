#pragma once

#include <cstdint>
#include <string_view>

namespace aglm {

// splitmix64: 64-bit state, trivially splittable by hashing a label into the
// seed. Platform-independent, so checkpoints trained from the same seed are
// byte-identical everywhere. The id string is recorded in checkpoint headers.
class SplitMix64 {
 public:
  static constexpr const char* kId = "splitmix64";

  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Derives an independent stream for a named parameter.
  static SplitMix64 split(uint64_t seed, std::string_view label) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : label) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return SplitMix64(seed ^ h);
  }

 private:
  uint64_t state_;
};

}  // namespace aglm
