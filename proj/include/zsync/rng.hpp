#pragma once
// Counter-based random number generation.
//
// Every random quantity in the library is drawn from a stream keyed by
// (master seed, purpose tag, integer key components...).  Streams are
// independent of generation order, so any part of an experiment can be
// produced in parallel or in isolation and still be bit-reproducible.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace zsync {

// Finalizer from the splitmix64 generator; good avalanche behavior.
constexpr inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags.  Never reuse a value.
enum : uint64_t {
  TAG_THETA = 1,        // ground-truth spins
  TAG_EDGE = 2,         // edge observation flips
  TAG_GOE = 3,          // ranged Gaussian pair observations
  TAG_SIDE = 4,         // per-block side-information families
  TAG_CHAIN = 5,        // Gibbs chain streams
  TAG_SCALAR = 6,       // scalar-channel observations
  TAG_REGION_GOE = 7,   // homogeneous per-region Gaussian pair observations
  TAG_SUBSAMPLE = 8,    // pair subsampling for risk estimates
  TAG_SYNTH = 9,        // synthetic block-level instances
  TAG_BOOTSTRAP = 10,   // bootstrap resampling
  TAG_REP = 11,         // per-repetition derived master seeds
  TAG_SPLIT = 12,       // the Gaussian splitting device
  TAG_MISC = 13,
};

// A small deterministic stream: splitmix64 over a hashed base state.
struct Rng {
  uint64_t base = 0;
  uint64_t ctr = 0;

  explicit Rng(uint64_t state) : base(state) {}

  uint64_t u64() { return mix64(base + 0x632be59bd9b4e019ULL * ++ctr); }

  // Uniform in [0, 1).
  double uniform() { return (u64() >> 11) * 0x1.0p-53; }

  // Uniform sign.
  int8_t sign() { return (u64() & 1) ? int8_t(1) : int8_t(-1); }

  // Standard normal via Box-Muller (two uniforms per draw; no caching so the
  // draw count is predictable).
  double gauss() {
    double u1 = 1.0 - uniform();  // in (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // 64-bit multiply-shift; bias is < 2^-32 for any n used here.
    return (uint64_t)(((__uint128_t)u64() * n) >> 64);
  }
};

inline uint64_t key_hash(uint64_t seed, uint64_t tag, const int64_t* key, size_t len) {
  uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ tag);
  for (size_t i = 0; i < len; ++i) h = mix64(h ^ (uint64_t)key[i]);
  return h;
}

inline uint64_t key_hash(uint64_t seed, uint64_t tag, std::initializer_list<int64_t> key) {
  return key_hash(seed, tag, key.begin(), key.size());
}

inline uint64_t key_hash(uint64_t seed, uint64_t tag, const std::vector<int64_t>& key) {
  return key_hash(seed, tag, key.data(), key.size());
}

// The canonical way to obtain a stream.
inline Rng keyed_rng(uint64_t seed, uint64_t tag, std::initializer_list<int64_t> key = {}) {
  return Rng(key_hash(seed, tag, key));
}

}  // namespace zsync
