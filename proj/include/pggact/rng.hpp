#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pggact {

// All randomness in the simulator flows through this wrapper so that a run is
// reproducible from a single seed. mt19937_64 output is pinned by the C++
// standard; the derived draws below avoid std::uniform_*_distribution, whose
// results vary between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n > 0 (Lemire multiply-shift; bias < 2^-64).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Seed of trial k within a multi-trial experiment.
inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t k) {
  return base_seed ^ k;
}

}  // namespace pggact
