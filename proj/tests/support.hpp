#pragma once

#include <catch_amalgamated.hpp>

#include <cmath>

#include "scho/random.hpp"

namespace scho::test {

inline double rel_diff(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

/// Sum over entries without any quadrature weights.
inline double plain_sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

/// A small, admissible velocity with no structure: random faces, walls zeroed.
inline VectorField noisy_velocity(const GridSpec& g, SplitMix64& rng, double amp = 1.0) {
  return random_vector(g, rng, -amp, amp, true);
}

}  // namespace scho::test
