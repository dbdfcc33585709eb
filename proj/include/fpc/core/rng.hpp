#pragma once

#include <cstdint>

namespace fpc {

/// SplitMix64 stream (Steele, Lea & Flood 2014). The state advances by the
/// golden-ratio increment and each output is a fixed 64-bit finalizer of the
/// state, so a seed fully determines the stream on every platform.
/// Real-valued draws avoid <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0, rejection-sampled (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller; draws two uniforms per call.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream; the parent is not advanced.
  Rng child(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace fpc
