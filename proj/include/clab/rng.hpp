#pragma once

#include <cstdint>

namespace clab {

// Counter-based sample stream: sample i of stream `seed` is a pure function
// of (seed, i), so a sampling loop draws the same points no matter how it is
// scheduled. SplitMix64 finalizer (Steele, Lea & Flood 2014).
inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SampleStream {
 public:
  explicit SampleStream(uint64_t seed) : seed_(seed) {}

  // Uniform double in [0,1), indexed draw. The two-level hash keeps draws for
  // different (index, component) pairs decorrelated.
  double uniform(uint64_t index, uint64_t component = 0) const {
    uint64_t h = splitmix64(seed_ ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + component));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(uint64_t index, uint64_t component, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index, component);
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
};

}  // namespace clab
