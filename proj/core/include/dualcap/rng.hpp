#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace dualcap {

// Seeded generator with distributions defined here rather than through
// <random>'s distribution classes, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer over the pair; used to derive per-epoch and
// per-example streams from a single run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace dualcap
