#pragma once

#include <cstdint>

namespace roed {

// splitmix64 output function.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from one experiment seed plus
// structural tags (stream id, iteration, step).  Every stochastic
// operation in the solver draws from a seed produced here, so runs are
// reproducible from the single experiment seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ull);
  h = mix64(h ^ mix64(stream));
  h = mix64(h ^ mix64(a));
  h = mix64(h ^ mix64(b));
  return h;
}

// Counter-based generator: the k-th output is a pure function of
// (seed, k).  Portable across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return mix64(state_ += 0x9e3779b97f4a7c15ull); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Random sign, +1 or -1.
  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Stream tags for derive_seed.
inline constexpr std::uint64_t kStreamOuterSample = 1;
inline constexpr std::uint64_t kStreamNoiseSample = 2;
inline constexpr std::uint64_t kStreamFinalSample = 3;
inline constexpr std::uint64_t kStreamPerturbation = 4;

}  // namespace roed
