#pragma once

#include <cstdint>

namespace fcswift {

// Counter-based random streams. Every variate is a pure function of
// (seed, trial index, draw index), so trials can be evaluated in any order
// and on any number of workers while producing identical tallies.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct TrialStream {
  std::uint64_t key;

  TrialStream(std::uint64_t seed, std::uint64_t trial_index)
      : key(splitmix64(seed ^ splitmix64(0x9E3779B97F4A7C15ULL * (trial_index + 1)))) {}

  // Uniform double in [0, 1) for the given draw slot of this trial.
  double uniform(std::uint64_t draw_index) const {
    std::uint64_t h = splitmix64(key + 0xD1B54A32D192ED03ULL * (draw_index + 1));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }
};

}  // namespace fcswift
