#pragma once

// Discrete differential operators on the MAC grid. Scalars live at cell
// centers with homogeneous Neumann walls; vectors live on faces with no-slip
// walls (wall-normal entries are Dirichlet zero, tangential walls are handled
// by odd ghost reflection).
//
// The face space carries the weights hx*hy on interior faces and hx*hy/2 on
// wall-normal faces. With these weights grad_cc and -div_fc are adjoint on
// fields whose wall-normal entries vanish, which is what makes every weak form
// and every adjoint below consistent.

#include <cmath>
#include <functional>

#include "scho/grid.hpp"

namespace scho {

/// Quartic double well F(s) = (s^2-1)^2/4 and its derivatives.
struct DoubleWell {
  static double F(double s) {
    const double a = s * s - 1.0;
    return 0.25 * a * a;
  }
  static double f(double s) { return s * s * s - s; }
  static double fprime(double s) { return 3.0 * s * s - 1.0; }
  static double fsecond(double s) { return 6.0 * s; }
};

template <class Fn>
ScalarField map_cc(const ScalarField& u, Fn&& fn) {
  ScalarField out(u.grid());
  auto in = u.values();
  auto o = out.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = fn(in[k]);
  return out;
}

// ---------------------------------------------------------------------------
// In-place kernels (used by the solvers' hot loops)

inline void grad_cc_into(const ScalarField& u, VectorField& out) {
  const auto& g = u.grid();
  const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
  for (int j = 0; j < g.ny; ++j) {
    out.x(0, j) = 0.0;
    for (int i = 1; i < g.nx; ++i) out.x(i, j) = (u(i, j) - u(i - 1, j)) * ihx;
    out.x(g.nx, j) = 0.0;
  }
  for (int i = 0; i < g.nx; ++i) {
    out.y(i, 0) = 0.0;
    out.y(i, g.ny) = 0.0;
  }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.y(i, j) = (u(i, j) - u(i, j - 1)) * ihy;
}

inline void div_fc_into(const VectorField& v, ScalarField& out) {
  const auto& g = v.grid();
  const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (v.x(i + 1, j) - v.x(i, j)) * ihx + (v.y(i, j + 1) - v.y(i, j)) * ihy;
}

/// Neumann 5-point Laplacian, evaluated as the divergence of the face
/// gradient with the same floating-point operations as div_fc(grad_cc(u)).
inline void laplace_cc_into(const ScalarField& u, ScalarField& out) {
  const auto& g = u.grid();
  const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double c = u(i, j);
      const double fe = i + 1 < g.nx ? (u(i + 1, j) - c) * ihx : 0.0;
      const double fw = i > 0 ? (c - u(i - 1, j)) * ihx : 0.0;
      const double fn = j + 1 < g.ny ? (u(i, j + 1) - c) * ihy : 0.0;
      const double fs = j > 0 ? (c - u(i, j - 1)) * ihy : 0.0;
      out(i, j) = (fe - fw) * ihx + (fn - fs) * ihy;
    }
  }
}

/// Componentwise Laplacian for no-slip face fields. Wall-normal entries are
/// treated as zero on input and set to zero on output.
inline void laplace_face_into(const VectorField& v, VectorField& out) {
  const auto& g = v.grid();
  const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j < ny; ++j) {
    out.x(0, j) = 0.0;
    out.x(nx, j) = 0.0;
    for (int i = 1; i < nx; ++i) {
      const double c = v.x(i, j);
      const double w = i > 1 ? v.x(i - 1, j) : 0.0;
      const double e = i < nx - 1 ? v.x(i + 1, j) : 0.0;
      const double s = j > 0 ? v.x(i, j - 1) : -c;
      const double n = j < ny - 1 ? v.x(i, j + 1) : -c;
      out.x(i, j) = (e - 2.0 * c + w) * ihx2 + (n - 2.0 * c + s) * ihy2;
    }
  }
  for (int i = 0; i < nx; ++i) {
    out.y(i, 0) = 0.0;
    out.y(i, ny) = 0.0;
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = v.y(i, j);
      const double s = j > 1 ? v.y(i, j - 1) : 0.0;
      const double n = j < ny - 1 ? v.y(i, j + 1) : 0.0;
      const double w = i > 0 ? v.y(i - 1, j) : -c;
      const double e = i < nx - 1 ? v.y(i + 1, j) : -c;
      out.y(i, j) = (e - 2.0 * c + w) * ihx2 + (n - 2.0 * c + s) * ihy2;
    }
  }
}

// ---------------------------------------------------------------------------
// Pure operators

inline VectorField grad_cc(const ScalarField& u) {
  VectorField out(u.grid());
  grad_cc_into(u, out);
  return out;
}

inline ScalarField div_fc(const VectorField& v) {
  ScalarField out(v.grid());
  div_fc_into(v, out);
  return out;
}

inline ScalarField laplace_cc(const ScalarField& u) {
  ScalarField out(u.grid());
  laplace_cc_into(u, out);
  return out;
}

inline VectorField laplace_face(const VectorField& v) {
  VectorField out(v.grid());
  laplace_face_into(v, out);
  return out;
}

/// Centered average of the two neighbouring cells onto each interior face;
/// wall-normal faces get 0.
inline VectorField cells_to_faces(const ScalarField& u) {
  const auto& g = u.grid();
  VectorField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) out.x(i, j) = 0.5 * (u(i - 1, j) + u(i, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.y(i, j) = 0.5 * (u(i, j - 1) + u(i, j));
  return out;
}

/// Adjoint of cells_to_faces in the weighted inner products: each cell
/// collects half of every adjacent interior face value.
inline ScalarField faces_to_cells(const VectorField& v) {
  const auto& g = v.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      if (i > 0) s += v.x(i, j);
      if (i + 1 < g.nx) s += v.x(i + 1, j);
      if (j > 0) s += v.y(i, j);
      if (j + 1 < g.ny) s += v.y(i, j + 1);
      out(i, j) = 0.5 * s;
    }
  }
  return out;
}

inline VectorField face_product(VectorField a, const VectorField& b) {
  multiply(a, b);
  return a;
}

/// Conservative advection div(v * u_face). Requires a no-slip v.
inline ScalarField advect(const VectorField& v, const ScalarField& u) {
  require_same_grid(v.grid(), u.grid(), "advect");
  if (boundary_normal_max(v) > 1e-14) {
    throw PreconditionError("advect: velocity has nonzero wall-normal entries");
  }
  return div_fc(face_product(cells_to_faces(u), v));
}

/// Surface tension force -lambda * u_face * grad(w).
inline VectorField surface_force(const ScalarField& u, const ScalarField& w, double lambda) {
  require_same_grid(u.grid(), w.grid(), "surface_force");
  VectorField out = face_product(cells_to_faces(u), grad_cc(w));
  scale(-lambda, out);
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature

inline double inner_cc(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_cc");
  auto x = a.values();
  auto y = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s * a.grid().cell_area();
}

inline double inner_face(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_face");
  const auto& g = a.grid();
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    s += 0.5 * (a.x(0, j) * b.x(0, j) + a.x(g.nx, j) * b.x(g.nx, j));
    for (int i = 1; i < g.nx; ++i) s += a.x(i, j) * b.x(i, j);
  }
  for (int i = 0; i < g.nx; ++i) s += 0.5 * (a.y(i, 0) * b.y(i, 0) + a.y(i, g.ny) * b.y(i, g.ny));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s += a.y(i, j) * b.y(i, j);
  return s * g.cell_area();
}

inline double inner(const ScalarField& a, const ScalarField& b) { return inner_cc(a, b); }
inline double inner(const VectorField& a, const VectorField& b) { return inner_face(a, b); }

inline double mean_cc(const ScalarField& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s * a.grid().cell_area() / a.grid().area();
}

inline void remove_mean(ScalarField& a) {
  const double m = mean_cc(a);
  for (double& v : a.values()) v -= m;
}

template <GridField Field>
double l2_norm(const Field& a) {
  return std::sqrt(inner(a, a));
}

}  // namespace scho
