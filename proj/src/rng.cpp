#include "rlx/rng.hpp"

#include <cmath>

#include "rlx/error.hpp"

namespace rlx {
namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& w : state_) w = splitmix64(x);
}

Rng Rng::derive(uint64_t seed, uint64_t stream) {
  // Mix the stream id through splitmix64 so adjacent ids give unrelated
  // seeds, then reseed from scratch.
  uint64_t x = stream + 0x6a09e667f3bcc909ULL;
  uint64_t mixed = splitmix64(x);
  return Rng(seed ^ mixed);
}

uint64_t Rng::next_u64() {
  // xoshiro256** by Blackman & Vigna (public domain reference algorithm).
  uint64_t result = rotl(state_[1] * 5, 7) * 9;
  uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw Error("Rng::below: n must be positive");
  // Fixed-point multiply; the modulo bias is < n / 2^64, far below anything
  // observable, and the result is platform independent.
  unsigned __int128 wide = static_cast<unsigned __int128>(next_u64());
  return static_cast<uint64_t>((wide * n) >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller. uniform() can return exactly 0, so flip to (0, 1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double mag = std::sqrt(-2.0 * std::log(u1));
  double two_pi_u2 = 2.0 * M_PI * u2;
  spare_ = mag * std::sin(two_pi_u2);
  has_spare_ = true;
  return mag * std::cos(two_pi_u2);
}

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

}  // namespace rlx
