#pragma once

#include <cstdint>
#include <random>

namespace ncr {

// Seeded generator with implementation-independent conversions, so that a
// fixed seed produces identical samples on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }
  int sign() { return (engine_() >> 63) ? 1 : -1; }
  bool coin(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ncr
