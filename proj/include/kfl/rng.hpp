#pragma once

#include <cmath>
#include <cstdint>

namespace kfl {

// Deterministic PRNG with explicit stream splitting.  The standard <random>
// distributions are implementation-defined, so experiment reproducibility
// (byte-identical outputs across platforms) requires rolling the small amount
// of machinery we need: xoshiro256** seeded through splitmix64, plus uniform
// and normal variates built only from arithmetic on the raw 64-bit stream.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

class Rng {
public:
  explicit Rng(uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
    have_normal_ = false;
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_;
    }
    // Box-Muller; reject the measure-zero origin to keep log finite.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_normal_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Independent child stream; used to decouple sample k from sample k+1 so
  // that enlarging a budget never perturbs earlier draws.
  Rng split(uint64_t stream) const {
    SplitMix64 sm(s_[0] ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return Rng(sm.next() ^ s_[3]);
  }

private:
  uint64_t s_[4];
  bool have_normal_;
  double cached_ = 0.0;
};

}  // namespace kfl
