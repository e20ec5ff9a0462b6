#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "scho/grid.hpp"

namespace scho {

/// SplitMix64. Every random field in the project is drawn from one of these,
/// seeded from the run configuration.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Cellwise independent uniform values in [lo, hi].
inline ScalarField random_scalar(const GridSpec& g, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  ScalarField u(g);
  for (double& x : u.values()) x = rng.uniform(lo, hi);
  return u;
}

/// Facewise uniform values; wall-normal entries are zero when no_slip is set.
inline VectorField random_vector(const GridSpec& g, SplitMix64& rng, double lo = -1.0, double hi = 1.0,
                                 bool no_slip = true) {
  VectorField v(g);
  for (double& x : v.xvals()) x = rng.uniform(lo, hi);
  for (double& x : v.yvals()) x = rng.uniform(lo, hi);
  if (no_slip) zero_boundary_normal(v);
  return v;
}

/// Smooth random scalar: a handful of cosine modes with random amplitudes.
/// Satisfies the discrete Neumann condition only approximately.
inline ScalarField smooth_random_scalar(const GridSpec& g, SplitMix64& rng, int modes = 3, double amp = 1.0) {
  ScalarField u(g);
  const double pi = std::numbers::pi;
  for (int kx = 0; kx <= modes; ++kx) {
    for (int ky = 0; ky <= modes; ++ky) {
      const double a = amp * rng.uniform(-1.0, 1.0) / (1.0 + kx * kx + ky * ky);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          u(i, j) += a * std::cos(kx * pi * g.xc(i) / g.Lx) * std::cos(ky * pi * g.yc(j) / g.Ly);
    }
  }
  return u;
}

/// Smooth random face field built from sine modes that vanish on the walls
/// in the normal direction.
inline VectorField smooth_random_vector(const GridSpec& g, SplitMix64& rng, int modes = 3, double amp = 1.0) {
  VectorField v(g);
  const double pi = std::numbers::pi;
  for (int kx = 1; kx <= modes; ++kx) {
    for (int ky = 1; ky <= modes; ++ky) {
      const double ax = amp * rng.uniform(-1.0, 1.0) / (kx * kx + ky * ky);
      const double ay = amp * rng.uniform(-1.0, 1.0) / (kx * kx + ky * ky);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
          v.x(i, j) += ax * std::sin(kx * pi * g.xf(i) / g.Lx) * std::sin(ky * pi * g.yc(j) / g.Ly);
      for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          v.y(i, j) += ay * std::sin(kx * pi * g.xc(i) / g.Lx) * std::sin(ky * pi * g.yf(j) / g.Ly);
    }
  }
  zero_boundary_normal(v);
  return v;
}

}  // namespace scho
