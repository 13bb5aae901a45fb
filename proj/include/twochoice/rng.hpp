#pragma once

#include <cstdint>
#include <random>

namespace twochoice {

/// Roles for independent child streams of one root seed. A stream is never
/// shared between roles, so scripts cannot correlate with strategy coins.
enum class StreamRole : std::uint32_t {
  Script = 1,
  Hash = 2,
  Strategy = 3,
  Game = 4,
};

/// Seeded 64-bit stream. Child streams are derived as
/// mt19937_64(seed_seq{root_lo, root_hi, role, index_lo, index_hi}).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t root, StreamRole role, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                      static_cast<std::uint32_t>(role), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double canonical() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return canonical() < p; }

  bool coin() { return (engine_() >> 63) != 0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  explicit Rng(std::seed_seq& seq) : engine_(seq) {}

  std::mt19937_64 engine_;
};

/// The three per-trial streams a single balls-and-bins run consumes.
struct RunStreams {
  Rng hash;
  Rng strategy;

  static RunStreams derive(std::uint64_t root, std::uint64_t trial = 0) {
    return {Rng::derive(root, StreamRole::Hash, trial), Rng::derive(root, StreamRole::Strategy, trial)};
  }
};

}  // namespace twochoice
