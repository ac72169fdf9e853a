#pragma once

#include <cstdint>
#include <cmath>

namespace cytrm {

// Keyed, counter-style random number generation. Every random object in the
// simulator is a pure function of a 64-bit key, and keys are derived by
// chaining (parent key, salt) pairs. This is what makes lazily generated
// environments independent of exploration order and safe to query from
// concurrent trials.

inline constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function (Steele, Lea, Flood; Vigna's fixed-increment
// variant). Passes BigCrush as a plain sequence generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One-way combination of a key and a salt. Used to derive child-vertex keys
// from parent keys and per-trial keys from the run seed.
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) {
  return mix64((key ^ (salt + kGolden64)) + kGolden64 * (salt + 1));
}

// Domain-separation salts so that trial streams and edge streams derived from
// the same run seed can never collide by construction.
inline constexpr std::uint64_t kEdgeStreamSalt = 0x45444745u;   // "EDGE"
inline constexpr std::uint64_t kTrialStreamSalt = 0x5452494cu;  // "TRIL"

// Sequential stream over a fixed key: the i-th output is a pure function of
// (state0, i), so replaying a stream is just re-seeding it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden64;
    return mix64(state_);
  }

  // Uniform on [0, 1); 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Bernoulli(p) for p in [0, 1]; p = 1 always succeeds since next_unit() < 1.
  bool next_bernoulli(double p) { return next_unit() < p; }

  // Knuth's product-of-uniforms sampler; fine for the mean values used here
  // (pole heights are order 1, never in the hundreds).
  unsigned next_poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    unsigned k = 0;
    double prod = next_unit();
    while (prod > limit) {
      ++k;
      prod *= next_unit();
    }
    return k;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t trial_seed(std::uint64_t run_seed, std::uint64_t trial) {
  return derive_key(derive_key(run_seed, kTrialStreamSalt), trial);
}

}  // namespace cytrm
