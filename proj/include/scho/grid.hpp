#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scho/errors.hpp"

namespace scho {

/// Uniform rectangular grid on [0,Lx] x [0,Ly] with nx x ny cells.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double Lx = 0.0;
  double Ly = 0.0;
  double hx = 0.0;
  double hy = 0.0;

  double cell_area() const { return hx * hy; }
  double area() const { return Lx * Ly; }
  /// Cell-center abscissa / ordinate.
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }
  /// Face coordinates (vertical faces at x = i*hx, horizontal at y = j*hy).
  double xf(int i) const { return i * hx; }
  double yf(int j) const { return j * hy; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.nx == b.nx && a.ny == b.ny && a.Lx == b.Lx && a.Ly == b.Ly;
  }
};

inline GridSpec make_grid(int nx, int ny, double Lx, double Ly) {
  if (nx < 4 || ny < 4) {
    throw ConfigError("grid needs at least 4 cells per direction, got nx=" + std::to_string(nx) +
                      " ny=" + std::to_string(ny));
  }
  if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly)) {
    throw ConfigError("domain lengths must be positive and finite");
  }
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.Lx = Lx;
  g.Ly = Ly;
  g.hx = Lx / nx;
  g.hy = Ly / ny;
  return g;
}

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) {
    throw ShapeError(std::string(where) + ": grid mismatch (" + std::to_string(a.nx) + "x" +
                     std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" + std::to_string(b.ny) +
                     ")");
  }
}

/// Cell-centered scalar, stored row by row: index i + nx*j.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid_(g), values_(static_cast<std::size_t>(g.nx) * g.ny, fill) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[i + grid_.nx * j]; }
  double operator()(int i, int j) const { return values_[i + grid_.nx * j]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Staggered (MAC) vector: x-components on the (nx+1) x ny vertical faces,
/// y-components on the nx x (ny+1) horizontal faces.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const GridSpec& g, double fill = 0.0)
      : grid_(g),
        xvals_(static_cast<std::size_t>(g.nx + 1) * g.ny, fill),
        yvals_(static_cast<std::size_t>(g.nx) * (g.ny + 1), fill) {}

  const GridSpec& grid() const { return grid_; }

  double& x(int i, int j) { return xvals_[i + (grid_.nx + 1) * j]; }
  double x(int i, int j) const { return xvals_[i + (grid_.nx + 1) * j]; }
  double& y(int i, int j) { return yvals_[i + grid_.nx * j]; }
  double y(int i, int j) const { return yvals_[i + grid_.nx * j]; }

  std::span<double> xvals() { return xvals_; }
  std::span<const double> xvals() const { return xvals_; }
  std::span<double> yvals() { return yvals_; }
  std::span<const double> yvals() const { return yvals_; }

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  GridSpec grid_;
  std::vector<double> xvals_;
  std::vector<double> yvals_;
};

// Elementwise algebra shared by both layouts. Every binary operation checks
// the grids; there is no broadcasting.

namespace detail {
template <class F>
void for_each_array(ScalarField& a, F&& f) {
  f(a.values());
}
template <class F>
void for_each_array(VectorField& a, F&& f) {
  f(a.xvals());
  f(a.yvals());
}
template <class F>
void for_each_array_pair(ScalarField& a, const ScalarField& b, F&& f) {
  require_same_grid(a.grid(), b.grid(), "field op");
  f(a.values(), b.values());
}
template <class F>
void for_each_array_pair(VectorField& a, const VectorField& b, F&& f) {
  require_same_grid(a.grid(), b.grid(), "field op");
  f(a.xvals(), b.xvals());
  f(a.yvals(), b.yvals());
}
}  // namespace detail

template <class Field>
concept GridField = std::same_as<Field, ScalarField> || std::same_as<Field, VectorField>;

/// y += a*x
template <GridField Field>
void axpy(double a, const Field& x, Field& y) {
  detail::for_each_array_pair(y, x, [a](std::span<double> yy, std::span<const double> xx) {
    for (std::size_t k = 0; k < yy.size(); ++k) yy[k] += a * xx[k];
  });
}

/// y = x + b*y
template <GridField Field>
void xpby(const Field& x, double b, Field& y) {
  detail::for_each_array_pair(y, x, [b](std::span<double> yy, std::span<const double> xx) {
    for (std::size_t k = 0; k < yy.size(); ++k) yy[k] = xx[k] + b * yy[k];
  });
}

template <GridField Field>
void scale(double a, Field& x) {
  detail::for_each_array(x, [a](std::span<double> xx) {
    for (double& v : xx) v *= a;
  });
}

/// Pointwise product x *= d.
template <GridField Field>
void multiply(Field& x, const Field& d) {
  detail::for_each_array_pair(x, d, [](std::span<double> xx, std::span<const double> dd) {
    for (std::size_t k = 0; k < xx.size(); ++k) xx[k] *= dd[k];
  });
}

template <GridField Field>
Field operator+(Field a, const Field& b) {
  axpy(1.0, b, a);
  return a;
}
template <GridField Field>
Field operator-(Field a, const Field& b) {
  axpy(-1.0, b, a);
  return a;
}
template <GridField Field>
Field operator*(double s, Field a) {
  scale(s, a);
  return a;
}
template <GridField Field>
Field& operator+=(Field& a, const Field& b) {
  axpy(1.0, b, a);
  return a;
}
template <GridField Field>
Field& operator-=(Field& a, const Field& b) {
  axpy(-1.0, b, a);
  return a;
}

inline bool all_finite(const ScalarField& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}
inline bool all_finite(const VectorField& a) {
  auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(a.xvals().begin(), a.xvals().end(), fin) &&
         std::all_of(a.yvals().begin(), a.yvals().end(), fin);
}

inline double max_abs(std::span<const double> xx) {
  double m = 0.0;
  for (double v : xx) m = std::max(m, std::abs(v));
  return m;
}
inline double max_abs(const ScalarField& a) { return max_abs(a.values()); }
inline double max_abs(const VectorField& a) { return std::max(max_abs(a.xvals()), max_abs(a.yvals())); }

/// Largest magnitude among the wall-normal entries (x-faces at i=0,nx and
/// y-faces at j=0,ny).
inline double boundary_normal_max(const VectorField& v) {
  const auto& g = v.grid();
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) m = std::max({m, std::abs(v.x(0, j)), std::abs(v.x(g.nx, j))});
  for (int i = 0; i < g.nx; ++i) m = std::max({m, std::abs(v.y(i, 0)), std::abs(v.y(i, g.ny))});
  return m;
}

inline void zero_boundary_normal(VectorField& v) {
  const auto& g = v.grid();
  for (int j = 0; j < g.ny; ++j) v.x(0, j) = v.x(g.nx, j) = 0.0;
  for (int i = 0; i < g.nx; ++i) v.y(i, 0) = v.y(i, g.ny) = 0.0;
}

/// True when every wall-normal entry is exactly zero, i.e. the field may play
/// a no-slip role (velocity, linearized velocity, adjoint velocity).
inline bool is_admissible_velocity(const VectorField& v, double tol = 0.0) {
  return boundary_normal_max(v) <= tol;
}

}  // namespace scho
