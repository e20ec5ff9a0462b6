#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <limits>
#include <optional>
#include <utility>

#include "scho/operators.hpp"

namespace scho {

inline std::string format_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // ||rhs - A x|| / ||rhs||, recomputed from scratch
  double rounding_floor = 0.0;  // relative residual attainable in floating point at x
  bool converged = false;       // final_residual <= tol
  bool at_rounding_floor = false;
};

struct CgOptions {
  double tol = 1e-10;
  int maxiter = 0;  // 0 selects 10 * (number of cells)
  bool nullspace_mean = false;
};

namespace detail {
inline void project_nullspace(ScalarField& a, bool on) {
  if (on) remove_mean(a);
}
inline void project_nullspace(VectorField&, bool) {}
}  // namespace detail

/// Jacobi-preconditioned conjugate gradients for an operator that is symmetric
/// positive definite in the weighted field inner product. `apply(in, out)`
/// must overwrite `out`. `inv_diag`, when given, is the pointwise inverse of
/// the operator diagonal. With `nullspace_mean` the constant mode is removed
/// from the right-hand side, the search space and the returned solution.
///
/// Iteration also stops once the true residual reaches the rounding floor
/// 64 eps (4 ||diag(A) x|| + ||b||) / ||b||, below which it cannot make
/// progress (||A x|| replaces the diagonal term without a preconditioner; 4
/// bounds the absolute row sums of the stencils used here relative to their
/// diagonal). `converged` reports only the requested tolerance; callers may
/// accept `at_rounding_floor` instead.
///
/// Exhausting maxiter returns converged = false; non-finite intermediate
/// values or a non-positive curvature raise NumericalError.
template <GridField Field, class Apply>
std::pair<Field, SolveReport> cg_solve(Apply&& apply, const Field& rhs, const CgOptions& opt = {},
                                       const Field* inv_diag = nullptr, const Field* x0 = nullptr) {
  const GridSpec& g = rhs.grid();
  const int maxiter = opt.maxiter > 0 ? opt.maxiter : 10 * g.nx * g.ny;
  const bool ns = opt.nullspace_mean;

  Field b = rhs;
  detail::project_nullspace(b, ns);
  SolveReport rep;
  Field x = x0 ? *x0 : Field(g);
  detail::project_nullspace(x, ns);

  const double bnorm = l2_norm(b);
  if (!std::isfinite(bnorm)) throw NumericalError("cg_solve: non-finite right-hand side");
  if (bnorm == 0.0) {
    rep.converged = true;
    return {Field(g), rep};
  }

  Field r(g), z(g), p(g), Ap(g);
  constexpr double kFloor = 64.0 * std::numeric_limits<double>::epsilon();
  double floor = 0.0;
  auto true_residual = [&]() {
    apply(x, Ap);
    double scale_ax = l2_norm(Ap);
    if (inv_diag) {
      z = x;
      scho::detail::for_each_array_pair(z, *inv_diag, [](std::span<double> zv, std::span<const double> dv) {
        for (std::size_t k = 0; k < zv.size(); ++k) zv[k] = dv[k] != 0.0 ? zv[k] / dv[k] : 0.0;
      });
      scale_ax = std::max(scale_ax, 4.0 * l2_norm(z));
    }
    floor = kFloor * (scale_ax + bnorm) / bnorm;
    r = b;
    axpy(-1.0, Ap, r);
    detail::project_nullspace(r, ns);
    return l2_norm(r) / bnorm;
  };
  auto precondition = [&]() {
    z = r;
    if (inv_diag) multiply(z, *inv_diag);
    detail::project_nullspace(z, ns);
  };

  double res = true_residual();
  int it = 0;
  // A few restarts from the true residual guard against drift of the
  // recursively updated residual at tight tolerances.
  for (int restart = 0; restart < 8 && res > std::max(opt.tol, floor) && it < maxiter; ++restart) {
    precondition();
    p = z;
    double rz = inner(r, z);
    while (it < maxiter) {
      apply(p, Ap);
      const double pAp = inner(p, Ap);
      if (!std::isfinite(pAp)) throw NumericalError("cg_solve: non-finite value during iteration");
      if (pAp <= 0.0) {
        if (l2_norm(p) == 0.0) break;
        throw NumericalError("cg_solve: operator is not positive definite on the search space");
      }
      const double alpha = rz / pAp;
      axpy(alpha, p, x);
      axpy(-alpha, Ap, r);
      ++it;
      const double rn = l2_norm(r) / bnorm;
      if (!std::isfinite(rn)) throw NumericalError("cg_solve: non-finite residual");
      if (rn <= std::max(opt.tol, floor)) break;
      precondition();
      const double rz_new = inner(r, z);
      xpby(z, rz_new / rz, p);
      rz = rz_new;
    }
    res = true_residual();
  }

  detail::project_nullspace(x, ns);
  rep.iterations = it;
  rep.final_residual = res;
  rep.rounding_floor = floor;
  rep.converged = res <= opt.tol;
  rep.at_rounding_floor = res <= floor;
  return {std::move(x), rep};
}

}  // namespace scho
