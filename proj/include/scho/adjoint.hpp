#pragma once

// Backward sweep for the adjoint system
//
//   -g1_t - mu Lap g1 + grad q = -g2 grad u^ + (v^ - v_d),   div g1 = 0,   g1 = 0 on the wall,  g1(T) = 0
//   -g2_t - v^.grad g2 + alpha g2 + lambda grad w^.g1 + f'(u^) g3 = (u^ - u_d) + Lap g3,   g2(T) = 0
//    g3 = -Lap g2 - lambda grad u^.g1
//
// Each backward step undoes one forward step in reverse order: the Stokes
// adjoint (Helmholtz + pressure Poisson) first, then the Cahn-Hilliard-Oono
// adjoint (one solve with the same SPD operator M as the forward step). The
// spatial operators are the weighted-inner-product adjoints of the forward
// ones, so the sweep is the exact transpose of the linearized solver and
//
//   sum_n dt <g1^n, h^n> = sum_n dt [<u^n - u_d^n, phi2^n> + <v^n - v_d^n, phi1^n>]
//
// holds up to the CG tolerance.

#include <vector>

#include "scho/linearized.hpp"
#include "scho/state.hpp"

namespace scho {

/// Desired states, indexed by time level. Levels 0..nt-1 enter the cost.
struct Targets {
  std::vector<VectorField> v_d;
  std::vector<ScalarField> u_d;
};

inline void require_targets(const Targets& t, const GridSpec& g, const TimeGrid& tg, const char* what) {
  if (static_cast<int>(t.v_d.size()) < tg.nt || static_cast<int>(t.u_d.size()) < tg.nt) {
    throw ShapeError(std::string(what) + ": targets must cover time levels 0..nt-1");
  }
  for (int n = 0; n < tg.nt; ++n) {
    require_same_grid(t.v_d[n].grid(), g, what);
    require_same_grid(t.u_d[n].grid(), g, what);
  }
}

/// Targets equal to a trajectory's own states (zero tracking misfit).
inline Targets targets_from_trajectory(const Trajectory& tr) {
  Targets t;
  for (const auto& s : tr.snapshots) {
    t.v_d.push_back(s.v);
    t.u_d.push_back(s.u);
  }
  return t;
}

struct AdjTrajectory {
  std::vector<VectorField> gamma1;  // 0..nt, gamma1[n] pairs with the control of step n
  std::vector<ScalarField> gamma2;  // 0..nt
  std::vector<ScalarField> gamma3;  // 0..nt, reconstructed from the g3 relation
  std::vector<ScalarField> q;       // 0..nt, adjoint pressure
};

inline AdjTrajectory solve_adjoint(const Trajectory& base, const Targets& targets,
                                   const SolverSettings& settings = {}) {
  const GridSpec& g = base.grid;
  const TimeGrid& tg = base.time;
  if (static_cast<int>(base.snapshots.size()) != tg.nt + 1) {
    throw ShapeError("solve_adjoint: base trajectory is incomplete");
  }
  require_targets(targets, g, tg, "solve_adjoint");
  check_memory_budget(g, tg, settings);

  const PhysParams& prm = base.params;
  const double dt = tg.dt, S = prm.stab_S, lambda = prm.lambda;
  const StepOperators ops(g, prm, dt, settings);
  const int nt = tg.nt;

  AdjTrajectory adj;
  adj.gamma1.assign(nt + 1, VectorField(g));
  adj.gamma2.assign(nt + 1, ScalarField(g));
  adj.gamma3.assign(nt + 1, ScalarField(g));
  adj.q.assign(nt + 1, ScalarField(g));

  // Cotangents of (u, v, p) at level n+1.
  ScalarField a_u(g), a_p(g);
  VectorField a_v(g);

  for (int n = nt - 1; n >= 0; --n) {
    const Snapshot& s0 = base.snapshots[n];
    const Snapshot& s1 = base.snapshots[n + 1];
    try {
      // Stokes adjoint: pressure correction, then Helmholtz.
      ScalarField a_phi = div_fc(a_v);
      scale(dt, a_phi);
      a_phi += a_p;
      ScalarField psi = ops.solve_N(a_phi, "adjoint pressure");
      VectorField a_vstar = a_v;
      axpy(1.0 / dt, grad_cc(psi), a_vstar);
      VectorField r = ops.solve_H(std::move(a_vstar), "adjoint helmholtz");

      ScalarField a_p_n = a_p;
      axpy(dt, div_fc(r), a_p_n);

      // Surface force -lambda I(u+) * grad(w+).
      ScalarField a_u1 = a_u;
      axpy(-lambda * dt, faces_to_cells(face_product(grad_cc(s1.w), r)), a_u1);
      ScalarField a_w1 = div_fc(face_product(cells_to_faces(s1.u), r));
      scale(lambda * dt, a_w1);

      // w+ = -Lap u+ + S u+ + f(u_n) - S u_n
      axpy(-1.0, laplace_cc(a_w1), a_u1);
      axpy(S, a_w1, a_u1);
      ScalarField coef = map_cc(s0.u, [S](double x) { return DoubleWell::fprime(x) - S; });
      ScalarField a_u_n = a_w1;
      multiply(a_u_n, coef);

      // u+ = M^{-1} [u_n - dt div(v_n I(u_n)) + dt Lap(f(u_n) - S u_n)]
      ScalarField c = ops.solve_M(a_u1, "adjoint cho");
      const VectorField gc = grad_cc(c);
      a_u_n += c;
      axpy(dt, faces_to_cells(face_product(gc, s0.v)), a_u_n);
      ScalarField lc = laplace_cc(c);
      multiply(lc, coef);
      axpy(dt, lc, a_u_n);

      VectorField a_v_n = r;
      axpy(dt, face_product(cells_to_faces(s0.u), gc), a_v_n);

      // Tracking terms of the cost at level n.
      axpy(dt, s0.u - targets.u_d[n], a_u_n);
      axpy(dt, s0.v - targets.v_d[n], a_v_n);
      zero_boundary_normal(a_v_n);

      adj.q[n] = psi;
      scale(-1.0 / (dt * dt), adj.q[n]);
      // The control enters the momentum step through the Leray projection,
      // so its sensitivity is the projected cotangent.
      adj.gamma1[n] = project_solenoidal(r, ops);
      adj.gamma2[n] = a_u_n;

      a_u = std::move(a_u_n);
      a_v = std::move(a_v_n);
      a_p = std::move(a_p_n);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), n);
    } catch (const NumericalError& e) {
      throw SolverError(e.what(), n);
    }
  }

  for (int n = 0; n <= nt; ++n) {
    ScalarField g3 = laplace_cc(adj.gamma2[n]);
    scale(-1.0, g3);
    axpy(-lambda, faces_to_cells(face_product(grad_cc(base.snapshots[n].u), adj.gamma1[n])), g3);
    adj.gamma3[n] = std::move(g3);
  }
  return adj;
}

/// Both sides of the duality identity for a direction h with linearized
/// response lin: {sum dt <g1, h>, sum dt [<u - u_d, phi2> + <v - v_d, phi1>]},
/// summed over the cost levels n = 0..nt-1.
inline std::pair<double, double> duality_pairings(const Trajectory& base, const Targets& targets,
                                                  const AdjTrajectory& adj, const LinTrajectory& lin,
                                                  const ControlSequence& h) {
  const double dt = base.time.dt;
  double lhs = 0.0, rhs = 0.0;
  for (int n = 0; n < base.time.nt; ++n) {
    lhs += dt * inner_face(adj.gamma1[n], h[n]);
    rhs += dt * (inner_cc(base.snapshots[n].u - targets.u_d[n], lin.phi2[n]) +
                 inner_face(base.snapshots[n].v - targets.v_d[n], lin.phi1[n]));
  }
  return {lhs, rhs};
}

}  // namespace scho
