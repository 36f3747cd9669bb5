#pragma once

#include <cmath>
#include <cstdint>

namespace rapid {

// Counter-based PRNG (Philox 4x32-10). Every consumer owns an explicit
// (key, counter) state, so streams can be split deterministically without
// any global RNG. split(i) derives an independent stream for worker i.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : key0_(static_cast<uint32_t>(seed)),
        key1_(static_cast<uint32_t>(seed >> 32)),
        ctr2_(static_cast<uint32_t>(stream)),
        ctr3_(static_cast<uint32_t>(stream >> 32)) {}

  Rng split(uint64_t substream) const {
    // Derive a new key from (key, substream) so child streams are
    // independent of the parent's position.
    uint64_t seed = (uint64_t(key1_) << 32 | key0_) ^
                    (0x9e3779b97f4a7c15ULL * (substream + 1));
    seed ^= seed >> 30;
    seed *= 0xbf58476d1ce4e5b9ULL;
    seed ^= seed >> 27;
    return Rng(seed, substream);
  }

  uint32_t next_u32() {
    if (have_ == 0) {
      block();
      have_ = 4;
    }
    return out_[4 - have_--];
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0, 1).
  double uniform() {
    return (next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one value per call, cached pair.
  double normal() {
    if (has_gauss_) {
      has_gauss_ = false;
      return gauss_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    gauss_ = r * std::sin(6.283185307179586 * u2);
    has_gauss_ = true;
    return r * std::cos(6.283185307179586 * u2);
  }

  // Uniform integer in [0, n).
  uint64_t randint(uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    uint64_t lim = ~uint64_t(0) - ~uint64_t(0) % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= lim);
    return v % n;
  }

 private:
  static uint32_t mulhi(uint32_t a, uint32_t b, uint32_t* lo) {
    uint64_t p = uint64_t(a) * b;
    *lo = static_cast<uint32_t>(p);
    return static_cast<uint32_t>(p >> 32);
  }

  void block() {
    uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
    uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      uint32_t lo0, lo1;
      uint32_t hi0 = mulhi(0xD2511F53u, c0, &lo0);
      uint32_t hi1 = mulhi(0xCD9E8D57u, c2, &lo1);
      uint32_t n0 = hi1 ^ c1 ^ k0;
      uint32_t n1 = lo1;
      uint32_t n2 = hi0 ^ c3 ^ k1;
      uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
    if (++ctr0_ == 0 && ++ctr1_ == 0) ++ctr2_;
  }

  uint32_t key0_, key1_;
  uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_ = 0, ctr3_ = 0;
  uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
  double gauss_ = 0.0;
  bool has_gauss_ = false;
};

}  // namespace rapid
