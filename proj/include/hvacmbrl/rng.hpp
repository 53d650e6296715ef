#pragma once
// Deterministic, serializable random source (xoshiro256++ seeded by splitmix64).
// Every stochastic component takes an explicit Rng so runs are reproducible
// from a single root seed; named child streams keep consumers independent.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hvacmbrl {

class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform on [0,1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n > 0. Unbiased via rejection.
  uint64_t uniform_index(uint64_t n);

  template <typename Vec>
  void shuffle(Vec& v) {
    // Fisher-Yates; stable across platforms because uniform_index is ours.
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent stream derived from (seed material, tag); never advances *this.
  static Rng stream(uint64_t root_seed, uint64_t tag);

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<uint64_t, 4> s_;
};

// Named stream tags used by the run orchestrator.
enum class RngStream : uint64_t {
  weather = 1,
  ite_load = 2,
  init_dynamics = 3,
  init_policy = 4,
  collect = 5,
  planner = 6,
  train_dynamics = 7,
  train_policy = 8,
};

inline Rng named_stream(uint64_t root_seed, RngStream which) {
  return Rng::stream(root_seed, static_cast<uint64_t>(which));
}

}  // namespace hvacmbrl
