#pragma once

#include <cmath>
#include <cstdint>

namespace qpusim::rng {

// SplitMix64. Self-contained so that seeded runs are byte-identical across
// standard-library versions (std::normal_distribution is not).
struct Stream {
  uint64_t state;

  explicit Stream(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in (0,1)
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller (one value per call, pair cached)
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline uint64_t mix(uint64_t a, uint64_t b) {
  Stream s(a ^ (b * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
  return s.next_u64();
}

// Counter-based stream keyed by (seed, point, trial); any component may be 0.
inline Stream keyed_stream(uint64_t seed, uint64_t point, uint64_t trial) {
  return Stream(mix(mix(seed, point), trial));
}

}  // namespace qpusim::rng
