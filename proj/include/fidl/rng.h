// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_RNG_H_
#define FIDL_RNG_H_

#include <cstdint>

namespace fidl {

// SplitMix64. Every random draw in the harness (template rotation, domain
// sampling, additive noise) goes through this generator so that ports in
// other languages reproduce the same streams. Update equations:
//
//   state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
//   z <- state
//   z <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9
//   z <- (z xor (z >> 27)) * 0x94D049BB133111EB
//   output z xor (z >> 31)
//
// Derived draws:
//   NextDouble()   = (Next() >> 11) * 2^-53                in [0, 1)
//   NextBelow(n)   = Next() mod n, rejecting Next() < (2^64 - n) mod n
//   NextGaussian() = Box-Muller on u1 = 1 - NextDouble(), u2 = NextDouble():
//                    sqrt(-2 ln u1) * cos(2 pi u2), then the paired
//                    sqrt(-2 ln u1) * sin(2 pi u2) on the following call.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double NextDouble() {
    return static_cast<double>(Next() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). n must be nonzero.
  std::uint64_t NextBelow(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = Next();
      if (r >= threshold) return r % n;
    }
  }

  double NextGaussian();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fidl

#endif  // FIDL_RNG_H_
