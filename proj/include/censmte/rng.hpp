#pragma once

#include <cmath>
#include <cstdint>

namespace censmte {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter). Streams are assigned per variable (or per
// bootstrap replicate), counters per row, so adding a stream or changing
// the worker layout never shifts any other draw.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ ^ mix(counter + 0x9E3779B97F4A7C15ULL));
  }

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(std::uint64_t counter, double rate = 1.0) const {
    return -std::log(uniform(counter)) / rate;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace censmte
