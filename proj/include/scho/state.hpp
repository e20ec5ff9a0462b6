#pragma once

// Forward solver for the Stokes / Cahn-Hilliard-Oono system
//
//   v_t - mu Lap v + grad p = -lambda u grad w + theta,   div v = 0,   v = 0 on the wall
//   u_t + v.grad u + alpha u = Lap w,   w = -Lap u + f(u),   Neumann walls
//
// One time step is a first-order splitting: a stabilized semi-implicit
// Cahn-Hilliard-Oono update with the lagged velocity, followed by an
// incremental pressure-projection Stokes update driven by the fresh (u, w).

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "scho/linsolve.hpp"
#include "scho/operators.hpp"

namespace scho {

using ControlSequence = std::vector<VectorField>;

struct PhysParams {
  double mu = 0.1;
  double lambda = 0.01;
  double alpha = 0.1;
  double stab_S = 2.0;

  /// Throws ConfigError on an invalid set; returns warnings for admissible
  /// but unsupported regimes.
  std::vector<std::string> validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("physics.mu must be > 0");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("physics.lambda must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("physics.alpha must be >= 0");
    if (!(stab_S >= 0.0) || !std::isfinite(stab_S)) throw ConfigError("physics.stab_S must be >= 0");
    std::vector<std::string> warnings;
    if (mu <= lambda) {
      warnings.push_back(
          "physics.mu <= physics.lambda: the stability and uniqueness estimates require mu > lambda");
    }
    return warnings;
  }
};

struct TimeGrid {
  double T = 0.0;
  int nt = 0;
  double dt = 0.0;

  double time(int n) const { return n * dt; }
};

inline TimeGrid make_time_grid(double T, int nt) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("time.T must be > 0");
  if (nt < 1) throw ConfigError("time.nt must be >= 1");
  return TimeGrid{T, nt, T / nt};
}

struct SolverSettings {
  double cg_tol = 1e-10;
  int cg_maxiter = 0;  // 0 selects 10 * nx * ny
  /// Upper bound on the bytes a stored trajectory may occupy.
  double memory_budget_bytes = 4.0 * 1024 * 1024 * 1024;
};

struct Snapshot {
  VectorField v;
  ScalarField u;
  ScalarField w;
  ScalarField p;
};

struct StepDiagnostics {
  double energy = 0.0;
  double mean_u = 0.0;
  double div_inf = 0.0;
};

struct Trajectory {
  GridSpec grid;
  PhysParams params;
  TimeGrid time;
  std::vector<Snapshot> snapshots;  // 0..nt
  ControlSequence controls;         // 0..nt-1; controls[n] drives step n -> n+1
  std::vector<StepDiagnostics> diagnostics;  // one per snapshot
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Per-step linear operators

/// The three symmetric operators of one time step, with their Jacobi
/// diagonals:
///   M = (1 + alpha dt) I + dt Lap^2 - S dt Lap      (cell centers)
///   H = I - mu dt Lap_face                         (interior faces)
///   N = -Lap                                       (cell centers, mean-free)
class StepOperators {
 public:
  StepOperators(const GridSpec& g, const PhysParams& prm, double dt, const SolverSettings& s)
      : grid_(g), prm_(prm), dt_(dt), settings_(s), tmp_cc_(g), inv_m_(g), inv_h_(g), inv_n_(g) {
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const int nbx = (i > 0) + (i + 1 < g.nx);
        const int nby = (j > 0) + (j + 1 < g.ny);
        const double lcc = -(nbx * ihx2 + nby * ihy2);
        const double l2 = lcc * lcc + nbx * ihx2 * ihx2 + nby * ihy2 * ihy2;
        inv_m_(i, j) = 1.0 / (1.0 + prm.alpha * dt + dt * l2 - prm.stab_S * dt * lcc);
        inv_n_(i, j) = 1.0 / -lcc;
      }
    }
    const double cmu = prm.mu * dt;
    for (int j = 0; j < g.ny; ++j) {
      const double dy = (j == 0 || j == g.ny - 1) ? 3.0 : 2.0;
      for (int i = 1; i < g.nx; ++i) inv_h_.x(i, j) = 1.0 / (1.0 + cmu * (2.0 * ihx2 + dy * ihy2));
    }
    for (int j = 1; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const double dx = (i == 0 || i == g.nx - 1) ? 3.0 : 2.0;
        inv_h_.y(i, j) = 1.0 / (1.0 + cmu * (dx * ihx2 + 2.0 * ihy2));
      }
    }
  }

  const GridSpec& grid() const { return grid_; }
  const PhysParams& params() const { return prm_; }
  double dt() const { return dt_; }
  const SolverSettings& settings() const { return settings_; }

  void apply_M(const ScalarField& in, ScalarField& out) const {
    laplace_cc_into(in, tmp_cc_);
    laplace_cc_into(tmp_cc_, out);
    const double a = 1.0 + prm_.alpha * dt_, sdt = prm_.stab_S * dt_;
    auto o = out.values();
    auto x = in.values();
    auto l = tmp_cc_.values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = a * x[k] + dt_ * o[k] - sdt * l[k];
  }

  void apply_H(const VectorField& in, VectorField& out) const {
    laplace_face_into(in, out);
    const double c = prm_.mu * dt_;
    xpby(in, -c, out);
    zero_boundary_normal(out);
  }

  void apply_N(const ScalarField& in, ScalarField& out) const {
    laplace_cc_into(in, out);
    scale(-1.0, out);
  }

  ScalarField solve_M(const ScalarField& rhs, const char* what, const ScalarField* x0 = nullptr) const {
    auto [x, rep] = cg_solve(
        [this](const ScalarField& a, ScalarField& b) { apply_M(a, b); }, rhs, options(false), &inv_m_, x0);
    check(rep, what);
    return std::move(x);
  }

  VectorField solve_H(VectorField rhs, const char* what) const {
    zero_boundary_normal(rhs);
    auto [x, rep] = cg_solve(
        [this](const VectorField& a, VectorField& b) { apply_H(a, b); }, rhs, options(false), &inv_h_);
    check(rep, what);
    return std::move(x);
  }

  /// Mean-free solution of -Lap x = rhs (rhs is projected to zero mean).
  ScalarField solve_N(const ScalarField& rhs, const char* what) const {
    auto [x, rep] = cg_solve(
        [this](const ScalarField& a, ScalarField& b) { apply_N(a, b); }, rhs, options(true), &inv_n_);
    check(rep, what);
    return std::move(x);
  }

 private:
  CgOptions options(bool ns) const {
    CgOptions o;
    o.tol = settings_.cg_tol;
    o.maxiter = settings_.cg_maxiter;
    o.nullspace_mean = ns;
    return o;
  }
  static void check(const SolveReport& rep, const char* what) {
    if (!rep.converged && !rep.at_rounding_floor) {
      throw SolverError(std::string(what) + ": CG did not converge (residual " +
                        format_sci(rep.final_residual) + " after " + std::to_string(rep.iterations) +
                        " iterations)");
    }
  }

  GridSpec grid_;
  PhysParams prm_;
  double dt_;
  SolverSettings settings_;
  mutable ScalarField tmp_cc_;
  ScalarField inv_m_;
  VectorField inv_h_;
  ScalarField inv_n_;
};

/// Discrete Leray projection onto {wall-normal entries zero, div = 0}.
inline VectorField project_solenoidal(VectorField v, const StepOperators& ops) {
  zero_boundary_normal(v);
  ScalarField phi = ops.solve_N(div_fc(v), "solenoidal projection");
  // -Lap phi = div v  =>  v + grad phi is divergence free
  axpy(1.0, grad_cc(phi), v);
  return v;
}

// ---------------------------------------------------------------------------
// Steps

/// Stabilized semi-implicit Cahn-Hilliard-Oono step with lagged velocity.
/// Returns (u_next, w_next).
inline std::pair<ScalarField, ScalarField> step_cho(const ScalarField& u_n, const VectorField& v_n,
                                                    const StepOperators& ops) {
  if (!all_finite(u_n)) throw NumericalError("step_cho: non-finite order parameter");
  const double dt = ops.dt(), S = ops.params().stab_S;
  ScalarField rhs = u_n;
  axpy(-dt, advect(v_n, u_n), rhs);
  ScalarField expl = map_cc(u_n, [S](double s) { return DoubleWell::f(s) - S * s; });
  axpy(dt, laplace_cc(expl), rhs);

  ScalarField u_next = ops.solve_M(rhs, "step_cho", &u_n);

  // w+ = -Lap u+ + f(u_n) + S (u+ - u_n)
  ScalarField w_next = laplace_cc(u_next);
  scale(-1.0, w_next);
  axpy(1.0, expl, w_next);
  axpy(S, u_next, w_next);
  return {std::move(u_next), std::move(w_next)};
}

/// Incremental pressure-projection Stokes step. Returns (v_next, p_next).
/// The control enters through its Leray projection: gradient parts of theta
/// are pressure and never reach the velocity.
inline std::pair<VectorField, ScalarField> step_stokes(const VectorField& v_n, const ScalarField& p_n,
                                                       const ScalarField& u_next, const ScalarField& w_next,
                                                       const VectorField& theta_n, const StepOperators& ops) {
  const double dt = ops.dt();
  VectorField force = surface_force(u_next, w_next, ops.params().lambda);
  force += project_solenoidal(theta_n, ops);
  axpy(-1.0, grad_cc(p_n), force);
  VectorField rhs = v_n;
  axpy(dt, force, rhs);
  VectorField v_star = ops.solve_H(std::move(rhs), "step_stokes helmholtz");

  // -Lap phi = -div(v*)/dt
  ScalarField d = div_fc(v_star);
  scale(-1.0 / dt, d);
  ScalarField phi = ops.solve_N(d, "step_stokes pressure");

  axpy(-dt, grad_cc(phi), v_star);
  ScalarField p_next = p_n;
  p_next += phi;
  return {std::move(v_star), std::move(p_next)};
}

// ---------------------------------------------------------------------------
// Diagnostics

/// E = 1/2 |v|^2 + lambda/2 |grad u|^2 + lambda int F(u).
inline double energy(const Snapshot& s, const PhysParams& prm) {
  const VectorField gu = grad_cc(s.u);
  double bulk = 0.0;
  for (double x : s.u.values()) bulk += DoubleWell::F(x);
  bulk *= s.u.grid().cell_area();
  return 0.5 * inner_face(s.v, s.v) + 0.5 * prm.lambda * inner_face(gu, gu) + prm.lambda * bulk;
}

inline StepDiagnostics diagnose(const Snapshot& s, const PhysParams& prm) {
  return {energy(s, prm), mean_cc(s.u), max_abs(div_fc(s.v))};
}

/// Chemical potential of an initial order parameter, -Lap u0 + f(u0).
inline ScalarField initial_chemical_potential(const ScalarField& u0) {
  ScalarField w = map_cc(u0, DoubleWell::f);
  axpy(-1.0, laplace_cc(u0), w);
  return w;
}

inline double trajectory_bytes(const GridSpec& g, const TimeGrid& tg) {
  const double cells = static_cast<double>(g.nx) * g.ny;
  const double faces = static_cast<double>(g.nx + 1) * g.ny + static_cast<double>(g.nx) * (g.ny + 1);
  return 8.0 * ((tg.nt + 1) * (3.0 * cells + faces) + tg.nt * faces);
}

inline void check_memory_budget(const GridSpec& g, const TimeGrid& tg, const SolverSettings& s) {
  const double need = trajectory_bytes(g, tg);
  if (need > s.memory_budget_bytes) {
    throw ConfigError("stored trajectory would need " + std::to_string(need / 1048576.0) +
                      " MiB, above the memory budget");
  }
}

inline void require_control_layout(const ControlSequence& theta, const GridSpec& g, const TimeGrid& tg,
                                   const char* what) {
  if (static_cast<int>(theta.size()) != tg.nt) {
    throw ShapeError(std::string(what) + ": control sequence has " + std::to_string(theta.size()) +
                     " entries, expected nt = " + std::to_string(tg.nt));
  }
  for (const auto& th : theta) require_same_grid(th.grid(), g, what);
}

/// Marches the split scheme from (u0, v0) under the control sequence theta.
inline Trajectory solve_forward(const ScalarField& u0, const VectorField& v0, const ControlSequence& theta,
                                const GridSpec& g, const PhysParams& prm, const TimeGrid& tg,
                                const SolverSettings& settings = {}) {
  require_same_grid(u0.grid(), g, "solve_forward");
  require_same_grid(v0.grid(), g, "solve_forward");
  require_control_layout(theta, g, tg, "solve_forward");
  if (!all_finite(u0) || !all_finite(v0)) throw NumericalError("solve_forward: non-finite initial data");
  if (!is_admissible_velocity(v0)) throw PreconditionError("solve_forward: v0 has nonzero wall-normal entries");
  check_memory_budget(g, tg, settings);

  Trajectory tr;
  tr.grid = g;
  tr.params = prm;
  tr.time = tg;
  tr.warnings = prm.validate();
  tr.controls = theta;
  tr.snapshots.reserve(tg.nt + 1);
  tr.snapshots.push_back(Snapshot{v0, u0, initial_chemical_potential(u0), ScalarField(g)});
  tr.diagnostics.push_back(diagnose(tr.snapshots.back(), prm));

  const StepOperators ops(g, prm, tg.dt, settings);
  for (int n = 0; n < tg.nt; ++n) {
    const Snapshot& s = tr.snapshots[n];
    try {
      auto [u1, w1] = step_cho(s.u, s.v, ops);
      auto [v1, p1] = step_stokes(s.v, s.p, u1, w1, theta[n], ops);
      if (!all_finite(u1) || !all_finite(v1)) throw NumericalError("solve_forward: non-finite state");
      tr.snapshots.push_back(Snapshot{std::move(v1), std::move(u1), std::move(w1), std::move(p1)});
    } catch (const SolverError& e) {
      throw SolverError(e.what(), n);
    } catch (const NumericalError& e) {
      throw SolverError(e.what(), n);
    }
    tr.diagnostics.push_back(diagnose(tr.snapshots.back(), prm));
  }
  return tr;
}

inline ControlSequence zero_controls(const GridSpec& g, const TimeGrid& tg) {
  return ControlSequence(tg.nt, VectorField(g));
}

// ---------------------------------------------------------------------------
// Stability probe

struct LipschitzResult {
  double ratio = 0.0;
  bool identical_controls = false;
  double state_distance = 0.0;
  double control_distance = 0.0;
};

/// sqrt(sum_n dt |theta_n|^2) over n = 0..nt-1.
inline double control_l2_norm(const ControlSequence& a, double dt) {
  double s = 0.0;
  for (const auto& x : a) s += dt * inner_face(x, x);
  return std::sqrt(s);
}

/// State-to-control difference ratio
///   (||v1 - v2||_{L2 L2} + max_n ||u1 - u2||_{H1}) / ||theta1 - theta2||_{L2 L2}.
inline LipschitzResult lipschitz_probe(const ControlSequence& theta1, const ControlSequence& theta2,
                                       const ScalarField& u0, const VectorField& v0, const GridSpec& g,
                                       const PhysParams& prm, const TimeGrid& tg,
                                       const SolverSettings& settings = {}) {
  require_control_layout(theta1, g, tg, "lipschitz_probe");
  require_control_layout(theta2, g, tg, "lipschitz_probe");
  LipschitzResult res;
  double dc = 0.0;
  for (int n = 0; n < tg.nt; ++n) {
    const VectorField d = theta1[n] - theta2[n];
    dc += tg.dt * inner_face(d, d);
  }
  res.control_distance = std::sqrt(dc);
  if (res.control_distance == 0.0) {
    res.identical_controls = true;
    return res;
  }
  const Trajectory a = solve_forward(u0, v0, theta1, g, prm, tg, settings);
  const Trajectory b = solve_forward(u0, v0, theta2, g, prm, tg, settings);
  double vv = 0.0, uh1 = 0.0;
  for (int n = 1; n <= tg.nt; ++n) {
    const VectorField dv = a.snapshots[n].v - b.snapshots[n].v;
    vv += tg.dt * inner_face(dv, dv);
    const ScalarField du = a.snapshots[n].u - b.snapshots[n].u;
    const VectorField gdu = grad_cc(du);
    uh1 = std::max(uh1, std::sqrt(inner_cc(du, du) + inner_face(gdu, gdu)));
  }
  res.state_distance = std::sqrt(vv) + uh1;
  res.ratio = res.state_distance / res.control_distance;
  return res;
}

}  // namespace scho
