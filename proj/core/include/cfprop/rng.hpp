#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cfprop {

/// Derives an independent stream seed from (seed, stream_id) by mixing both
/// through the SplitMix64 finalizer and xor-combining. Components that must
/// be independently reproducible (data generation, weight init, batch
/// shuffling, pair sampling, per-trial seeds) each own a derived stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

/// Deterministic PRNG: xoshiro256** (Blackman & Vigna, 2018) with its state
/// filled from four successive SplitMix64 outputs of the seed. The same seed
/// yields the same stream on every platform.
///
/// Distribution transforms are fixed:
///  - uniform doubles take the top 53 bits of one 64-bit output;
///  - normal() is Box-Muller, consuming exactly two uniforms per call and
///    discarding the sine branch;
///  - below(n) maps one output by 128-bit multiply-shift (bias < n / 2^64).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Fresh generator seeded with derive_seed(seed(), stream_id).
  Rng derive(std::uint64_t stream_id) const { return Rng(derive_seed(seed_, stream_id)); }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  /// Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace cfprop
