#pragma once

#include <cstdint>
#include <random>

namespace dualview {

/// Per-sample seed from a master seed: a splitmix64 finalizer over
/// master + (index + 1) * golden-ratio increment. For a fixed master the map
/// index -> seed is a bijection, so distinct indices never collide.
std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// Seeded generator with a stable mapping from raw bits to reals. The
/// standard distributions are implementation-defined, so uniform draws are
/// built from the engine output directly to keep datasets reproducible
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Seed for a child stream; consumes one draw.
  std::uint64_t fork() { return split_seed(engine_(), 0); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dualview
