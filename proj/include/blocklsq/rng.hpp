#pragma once

#include <cstdint>

namespace blocklsq {

// SplitMix64 stream. All randomized instance data is drawn through this so
// a seed reproduces the same problem on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [-1, 1).
  double next_pm1() { return 2.0 * next_unit() - 1.0; }

 private:
  std::uint64_t state_;
};

}  // namespace blocklsq
