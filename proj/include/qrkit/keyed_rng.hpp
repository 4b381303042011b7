#pragma once

#include <cstdint>

namespace qrkit {

// Counter-based random numbers: every draw is a pure function of
// (seed, step, stream, id), so results do not depend on scheduling and a
// covariate's draws follow its identity rather than its column position.
struct KeyedRng {
  std::uint64_t seed = 0;

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t bits(std::uint64_t step, std::uint64_t stream, std::uint64_t id = 0) const {
    return mix(mix(mix(mix(seed) ^ step) ^ stream) ^ id);
  }

  // uniform on [0, 1) with 53 random bits
  double uniform(std::uint64_t step, std::uint64_t stream, std::uint64_t id = 0) const {
    return static_cast<double>(bits(step, stream, id) >> 11) * 0x1.0p-53;
  }

  KeyedRng child(std::uint64_t key) const { return {mix(seed ^ mix(key))}; }
};

}  // namespace qrkit
