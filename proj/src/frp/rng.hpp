#pragma once

#include <cstdint>
#include <random>

namespace frp {

/// The single source of randomness for initialization and random bases.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Uniform reals take the top 53 bits of one draw, so a seed
/// reproduces the same parameters on any conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// U[0, 1)
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// U[lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// U(lo, hi): the 53-bit draw is centred in its cell, so neither end is hit.
  double open_uniform(double lo, double hi) {
    const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace frp
