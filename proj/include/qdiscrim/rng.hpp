#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qdiscrim {

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream owned by one trial.
constexpr std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(trial_index + 0x5851f42d4c957f2dULL));
}

/// Per-trial random stream. Not shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Wiener increment over a step of length dt.
  double wiener(double dt) { return std::sqrt(dt) * normal(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qdiscrim
