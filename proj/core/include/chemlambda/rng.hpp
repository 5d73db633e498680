#pragma once

#include <cstdint>
#include <random>

namespace chemlambda {

/// The engine's only source of randomness: std::mt19937_64, whose output
/// sequence is fixed by the C++ standard, so seeded runs replay on any
/// conforming implementation. Doubles are built from the top 53 bits rather
/// than through std distributions, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform in (0, 1].
  double uniform_positive() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace chemlambda
