#pragma once

// Tracking-type optimal control of the Stokes / Cahn-Hilliard-Oono system:
//
//   J(theta) = 1/2 |v - v_d|^2 + 1/2 |u - u_d|^2 + beta/2 |theta|^2     (integrated over (0,T) x Omega)
//
// minimized over the box theta_min <= theta <= theta_max. The reduced
// gradient is gamma1 + beta theta, with gamma1 from the adjoint sweep.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scho/adjoint.hpp"
#include "scho/linearized.hpp"
#include "scho/state.hpp"

namespace scho {

// ---------------------------------------------------------------------------
// Control-space algebra: L2(0,T; faces) with the left rectangle rule.

inline double control_inner(const ControlSequence& a, const ControlSequence& b, double dt) {
  if (a.size() != b.size()) throw ShapeError("control_inner: length mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += inner_face(a[n], b[n]);
  return dt * s;
}

inline void control_axpy(double a, const ControlSequence& x, ControlSequence& y) {
  if (x.size() != y.size()) throw ShapeError("control_axpy: length mismatch");
  for (std::size_t n = 0; n < x.size(); ++n) axpy(a, x[n], y[n]);
}

inline ControlSequence control_lincomb(const ControlSequence& x, double a, const ControlSequence& y) {
  ControlSequence out = x;
  control_axpy(a, y, out);
  return out;
}

// ---------------------------------------------------------------------------
// Problem data

/// Box bounds, either uniform scalars or per-face sequences (componentwise).
struct ControlBounds {
  double lo = -1.0;
  double hi = 1.0;
  std::optional<ControlSequence> lo_field;
  std::optional<ControlSequence> hi_field;
};

struct CostParams {
  double beta = 1e-3;
  Targets targets;
  ControlBounds bounds;

  void validate(const GridSpec& g, const TimeGrid& tg) const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("control.beta must be > 0");
    require_targets(targets, g, tg, "CostParams");
    if (!(bounds.lo <= bounds.hi)) throw ConfigError("control.theta_min must not exceed control.theta_max");
    if (bounds.lo_field || bounds.hi_field) {
      if (!bounds.lo_field || !bounds.hi_field) throw ConfigError("bound fields must be given in pairs");
      require_control_layout(*bounds.lo_field, g, tg, "bounds");
      require_control_layout(*bounds.hi_field, g, tg, "bounds");
      for (int n = 0; n < tg.nt; ++n) {
        const auto& lo = (*bounds.lo_field)[n];
        const auto& hi = (*bounds.hi_field)[n];
        for (std::size_t k = 0; k < lo.xvals().size(); ++k)
          if (lo.xvals()[k] > hi.xvals()[k]) throw ConfigError("bound fields are not ordered");
        for (std::size_t k = 0; k < lo.yvals().size(); ++k)
          if (lo.yvals()[k] > hi.yvals()[k]) throw ConfigError("bound fields are not ordered");
      }
    }
  }
};

struct CostBreakdown {
  double track_v = 0.0;
  double track_u = 0.0;
  double reg = 0.0;
  double total() const { return track_v + track_u + reg; }
};

/// Left rectangle rule over levels n = 0..nt-1.
inline CostBreakdown cost_terms(const Trajectory& tr, const ControlSequence& theta, const CostParams& cp) {
  const TimeGrid& tg = tr.time;
  require_control_layout(theta, tr.grid, tg, "cost");
  require_targets(cp.targets, tr.grid, tg, "cost");
  if (static_cast<int>(tr.snapshots.size()) != tg.nt + 1) throw ShapeError("cost: trajectory is incomplete");
  CostBreakdown c;
  for (int n = 0; n < tg.nt; ++n) {
    const VectorField dv = tr.snapshots[n].v - cp.targets.v_d[n];
    const ScalarField du = tr.snapshots[n].u - cp.targets.u_d[n];
    c.track_v += 0.5 * tg.dt * inner_face(dv, dv);
    c.track_u += 0.5 * tg.dt * inner_cc(du, du);
    c.reg += 0.5 * cp.beta * tg.dt * inner_face(theta[n], theta[n]);
  }
  return c;
}

inline double cost(const Trajectory& tr, const ControlSequence& theta, const CostParams& cp) {
  return cost_terms(tr, theta, cp).total();
}

/// g^n = gamma1^n + beta theta^n.
inline ControlSequence gradient(const AdjTrajectory& adj, const ControlSequence& theta, double beta) {
  if (adj.gamma1.size() < theta.size()) throw ShapeError("gradient: adjoint shorter than control");
  ControlSequence g;
  g.reserve(theta.size());
  for (std::size_t n = 0; n < theta.size(); ++n) {
    require_same_grid(adj.gamma1[n].grid(), theta[n].grid(), "gradient");
    VectorField gn = adj.gamma1[n];
    axpy(beta, theta[n], gn);
    g.push_back(std::move(gn));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Projections

inline ControlSequence project_box(ControlSequence theta, const ControlBounds& b) {
  auto clamp_array = [](std::span<double> x, auto lo, auto hi) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo(k), hi(k));
  };
  for (std::size_t n = 0; n < theta.size(); ++n) {
    if (b.lo_field) {
      const VectorField& lo = (*b.lo_field)[n];
      const VectorField& hi = (*b.hi_field)[n];
      clamp_array(theta[n].xvals(), [&](std::size_t k) { return lo.xvals()[k]; },
                  [&](std::size_t k) { return hi.xvals()[k]; });
      clamp_array(theta[n].yvals(), [&](std::size_t k) { return lo.yvals()[k]; },
                  [&](std::size_t k) { return hi.yvals()[k]; });
    } else {
      auto lo = [&](std::size_t) { return b.lo; };
      auto hi = [&](std::size_t) { return b.hi; };
      clamp_array(theta[n].xvals(), lo, hi);
      clamp_array(theta[n].yvals(), lo, hi);
    }
  }
  return theta;
}

inline ControlSequence project_box(ControlSequence theta, const CostParams& cp) {
  return project_box(std::move(theta), cp.bounds);
}

/// Dykstra's alternating projections between the box and the discrete
/// solenoidal space, per time level. Returns the last box iterate, so the
/// result is always box-feasible.
inline ControlSequence project_box_solenoidal(const ControlSequence& theta, const ControlBounds& b,
                                              const StepOperators& ops, int sweeps = 20) {
  ControlSequence out;
  out.reserve(theta.size());
  for (std::size_t n = 0; n < theta.size(); ++n) {
    ControlBounds bn = b;
    if (b.lo_field) {
      bn.lo_field = ControlSequence{(*b.lo_field)[n]};
      bn.hi_field = ControlSequence{(*b.hi_field)[n]};
    }
    VectorField x = theta[n];
    VectorField p(x.grid()), q(x.grid()), y(x.grid());
    for (int k = 0; k < sweeps; ++k) {
      y = project_box(ControlSequence{x + p}, bn)[0];
      p = (x + p) - y;
      x = project_solenoidal(y + q, ops);
      q = (y + q) - x;
    }
    out.push_back(std::move(y));
  }
  return out;
}

/// || theta - P(theta - s g) ||, the fixed-point residual of the variational
/// inequality <g, eta - theta> >= 0 for all admissible eta.
inline double optimality_residual(const ControlSequence& theta, const ControlSequence& grad,
                                  const CostParams& cp, double s, double dt) {
  if (!(s > 0.0)) throw PreconditionError("optimality_residual: step must be positive");
  ControlSequence trial = project_box(control_lincomb(theta, -s, grad), cp);
  control_axpy(-1.0, theta, trial);
  return std::sqrt(control_inner(trial, trial, dt));
}

// ---------------------------------------------------------------------------
// Reduced problem theta -> J(S(theta), theta)

struct ReducedProblem {
  ScalarField u0;
  VectorField v0;
  GridSpec grid;
  PhysParams params;
  TimeGrid time;
  CostParams cp;
  SolverSettings settings;

  Trajectory forward(const ControlSequence& theta) const {
    return solve_forward(u0, v0, theta, grid, params, time, settings);
  }
  double value(const ControlSequence& theta) const { return cost(forward(theta), theta, cp); }

  struct Evaluation {
    Trajectory traj;
    double J = 0.0;
    ControlSequence grad;
  };

  Evaluation evaluate(const ControlSequence& theta) const {
    Evaluation e{forward(theta), 0.0, {}};
    e.J = cost(e.traj, theta, cp);
    e.grad = gradient(solve_adjoint(e.traj, cp.targets, settings), theta, cp.beta);
    return e;
  }
};

// ---------------------------------------------------------------------------
// Projected gradient descent

enum class ProjectionMode { Box, BoxSolenoidal };

struct OptConfig {
  int max_iters = 50;
  double tol = 1e-4;
  double armijo_c1 = 1e-4;
  double backtrack_rho = 0.5;
  double s0 = 1.0;
  double s_min = 1e-12;
  double residual_step = 1.0;  // step used in the optimality residual
  ProjectionMode mode = ProjectionMode::Box;
  int dykstra_sweeps = 20;
};

struct OptState {
  ControlSequence theta;
  std::vector<double> J_history;
  std::vector<double> residual_history;
  std::vector<double> step_history;  // accepted step per iteration (0 for the initial entry)
  int iterations = 0;
  bool converged = false;
  std::string message;
};

inline OptState projected_gradient_descent(const ReducedProblem& prob, const ControlSequence& theta0,
                                           const OptConfig& cfg,
                                           const std::function<void(const OptState&)>& on_iter = {}) {
  prob.cp.validate(prob.grid, prob.time);
  const double dt = prob.time.dt;
  std::optional<StepOperators> ops;
  if (cfg.mode == ProjectionMode::BoxSolenoidal) ops.emplace(prob.grid, prob.params, dt, prob.settings);
  auto project = [&](ControlSequence th) {
    return cfg.mode == ProjectionMode::Box
               ? project_box(std::move(th), prob.cp)
               : project_box_solenoidal(th, prob.cp.bounds, *ops, cfg.dykstra_sweeps);
  };

  OptState st;
  st.theta = project(theta0);
  auto eval = prob.evaluate(st.theta);
  double J = eval.J;
  for (int k = 0;; ++k) {
    const double res = optimality_residual(st.theta, eval.grad, prob.cp, cfg.residual_step, dt);
    st.J_history.push_back(J);
    st.residual_history.push_back(res);
    if (k == 0) st.step_history.push_back(0.0);
    st.iterations = k;
    if (on_iter) on_iter(st);
    if (res <= cfg.tol * (1.0 + std::abs(J))) {
      st.converged = true;
      st.message = "optimality residual below tolerance";
      return st;
    }
    if (k >= cfg.max_iters) {
      st.message = "iteration limit reached";
      return st;
    }

    double s = cfg.s0;
    bool accepted = false;
    ControlSequence trial;
    Trajectory trial_traj;
    double J_trial = 0.0;
    while (s >= cfg.s_min) {
      trial = project(control_lincomb(st.theta, -s, eval.grad));
      ControlSequence step = control_lincomb(st.theta, -1.0, trial);
      const double d2 = control_inner(step, step, dt);
      try {
        trial_traj = prob.forward(trial);
      } catch (const SolverError& e) {
        throw SolverError(std::string("optimizer iteration ") + std::to_string(k + 1) + ": " + e.what(), e.step);
      }
      J_trial = cost(trial_traj, trial, prob.cp);
      if (J_trial <= J - cfg.armijo_c1 / s * d2) {
        accepted = true;
        break;
      }
      s *= cfg.backtrack_rho;
    }
    if (!accepted) {
      st.message = "line search failed";
      return st;
    }
    st.theta = std::move(trial);
    st.step_history.push_back(s);
    J = J_trial;
    eval.traj = std::move(trial_traj);
    eval.J = J;
    eval.grad = gradient(solve_adjoint(eval.traj, prob.cp.targets, prob.settings), st.theta, prob.cp.beta);
  }
}

// ---------------------------------------------------------------------------
// Derivative verification

struct TaylorReport {
  std::vector<double> eps;
  std::vector<double> remainders;
  std::vector<double> orders;  // orders[i] from eps[i], eps[i+1]
  double directional = 0.0;    // <g, h>, or ||DS h|| for the state remainder
  bool exact = false;          // all remainders exactly zero
};

inline std::vector<double> observed_orders(const std::vector<double>& eps, const std::vector<double>& rem) {
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    orders.push_back(std::log(rem[i] / rem[i + 1]) / std::log(eps[i] / eps[i + 1]));
  }
  return orders;
}

/// Order from the smallest-eps pair whose remainders both sit above `noise`
/// (rounding dominates below it). NaN when no such pair exists.
inline double asymptotic_order(const TaylorReport& rep, double noise) {
  for (std::size_t i = rep.orders.size(); i-- > 0;) {
    if (rep.remainders[i] > noise && rep.remainders[i + 1] > noise) return rep.orders[i];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// r(eps) = |J(theta + eps h) - J(theta) - eps <g, h>| with observed orders.
inline TaylorReport taylor_test(const ReducedProblem& prob, const ControlSequence& theta, const ControlSequence& h,
                                std::vector<double> eps = {1e-1, 3e-2, 1e-2, 3e-3}) {
  const double dt = prob.time.dt;
  TaylorReport rep;
  rep.eps = eps;
  const auto base = prob.evaluate(theta);
  rep.directional = control_inner(base.grad, h, dt);
  bool all_zero = true;
  for (double e : eps) {
    const double Je = prob.value(control_lincomb(theta, e, h));
    const double r = std::abs(Je - base.J - e * rep.directional);
    all_zero = all_zero && r == 0.0;
    rep.remainders.push_back(r);
  }
  rep.exact = all_zero;
  if (!all_zero) rep.orders = observed_orders(eps, rep.remainders);
  return rep;
}

struct GradCheckRow {
  double eps = 0.0;
  double fd = 0.0;
  double adjoint = 0.0;
  double rel_error = 0.0;
};

/// Forward-difference quotients (J(theta + eps h) - J(theta)) / eps against <g, h>.
inline std::vector<GradCheckRow> gradient_check(const ReducedProblem& prob, const ControlSequence& theta,
                                                const ControlSequence& h,
                                                std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
  const auto base = prob.evaluate(theta);
  const double dir = control_inner(base.grad, h, prob.time.dt);
  std::vector<GradCheckRow> rows;
  for (double e : eps) {
    const double fd = (prob.value(control_lincomb(theta, e, h)) - base.J) / e;
    const double denom = std::max(std::abs(dir), std::abs(fd));
    rows.push_back({e, fd, dir, denom > 0.0 ? std::abs(fd - dir) / denom : 0.0});
  }
  return rows;
}

/// Remainder of the state map: || S(theta + eps h) - S(theta) - eps DS(theta) h ||
/// in the discrete L2(0,T) norm of (v, u) over levels 1..nt.
inline TaylorReport linearized_taylor_test(const ReducedProblem& prob, const ControlSequence& theta,
                                           const ControlSequence& h,
                                           std::vector<double> eps = {1e-1, 3e-2, 1e-2, 3e-3}) {
  const TimeGrid& tg = prob.time;
  const Trajectory base = prob.forward(theta);
  const LinTrajectory lin = solve_linearized(base, h, prob.settings);
  TaylorReport rep;
  rep.eps = eps;
  {
    double s = 0.0;
    for (int n = 1; n <= tg.nt; ++n) s += tg.dt * (inner_face(lin.phi1[n], lin.phi1[n]) + inner_cc(lin.phi2[n], lin.phi2[n]));
    rep.directional = std::sqrt(s);
  }
  bool all_zero = true;
  for (double e : eps) {
    const Trajectory pert = prob.forward(control_lincomb(theta, e, h));
    double s = 0.0;
    for (int n = 1; n <= tg.nt; ++n) {
      VectorField dv = pert.snapshots[n].v - base.snapshots[n].v;
      axpy(-e, lin.phi1[n], dv);
      ScalarField du = pert.snapshots[n].u - base.snapshots[n].u;
      axpy(-e, lin.phi2[n], du);
      s += tg.dt * (inner_face(dv, dv) + inner_cc(du, du));
    }
    const double r = std::sqrt(s);
    all_zero = all_zero && r == 0.0;
    rep.remainders.push_back(r);
  }
  rep.exact = all_zero;
  if (!all_zero) rep.orders = observed_orders(eps, rep.remainders);
  return rep;
}

}  // namespace scho
