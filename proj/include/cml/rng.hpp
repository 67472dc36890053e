#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cml {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Folds a list of keys (master seed, realization, grid indices...) into a
/// single 64-bit stream seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

/// Reproducible random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the double conversion is done here so
/// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cml
