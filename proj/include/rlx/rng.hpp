#pragma once

#include <array>
#include <cstdint>

namespace rlx {

// Deterministic, cross-platform random number generator (xoshiro256**,
// seeded through splitmix64). Every random decision in the toolkit flows
// through an explicitly seeded instance so runs replay bit-identically on
// any platform; nothing here depends on libstdc++ distribution internals.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  // Independent child stream: derive(seed, k) != derive(seed, j) for k != j.
  // Used to give workers / matches / episodes their own streams so results
  // do not depend on evaluation order.
  static Rng derive(uint64_t seed, uint64_t stream);

  uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n); n must be > 0.
  uint64_t below(uint64_t n);

  // Standard normal via Box-Muller (pair cached).
  double normal();
  double normal(double mean, double stddev);

 private:
  std::array<uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rlx
