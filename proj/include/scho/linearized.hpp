#pragma once

// Sensitivity system around a stored trajectory (u^, v^, w^):
//
//   phi1_t - mu Lap phi1 + grad pbar = -lambda (phi2 grad w^ + u^ grad phi3) + h,   div phi1 = 0
//   phi2_t - Lap phi3 + phi1.grad u^ + v^.grad phi2 + alpha phi2 = 0
//   phi3 = -Lap phi2 + f'(u^) phi2
//
// The discretization freezes the coefficients at the time levels the forward
// scheme used, so one linearized step is the derivative of one forward step.

#include <cmath>
#include <vector>

#include "scho/state.hpp"

namespace scho {

struct LinTrajectory {
  std::vector<VectorField> phi1;     // 0..nt
  std::vector<ScalarField> phi2;     // 0..nt
  std::vector<ScalarField> phi3;     // 0..nt
  std::vector<ScalarField> pressure; // 0..nt, perturbation of the projection pressure
};

inline LinTrajectory solve_linearized(const Trajectory& base, const ControlSequence& h,
                                      const SolverSettings& settings = {}) {
  const GridSpec& g = base.grid;
  const TimeGrid& tg = base.time;
  if (static_cast<int>(base.snapshots.size()) != tg.nt + 1) {
    throw ShapeError("solve_linearized: base trajectory is incomplete");
  }
  require_control_layout(h, g, tg, "solve_linearized");

  const PhysParams& prm = base.params;
  const double dt = tg.dt, S = prm.stab_S, lambda = prm.lambda;
  const StepOperators ops(g, prm, dt, settings);

  LinTrajectory lin;
  lin.phi1.reserve(tg.nt + 1);
  lin.phi2.reserve(tg.nt + 1);
  lin.phi3.reserve(tg.nt + 1);
  lin.pressure.reserve(tg.nt + 1);
  lin.phi1.emplace_back(g);
  lin.phi2.emplace_back(g);
  lin.phi3.emplace_back(g);
  lin.pressure.emplace_back(g);

  for (int n = 0; n < tg.nt; ++n) {
    const Snapshot& s0 = base.snapshots[n];
    const Snapshot& s1 = base.snapshots[n + 1];
    const VectorField& phi1 = lin.phi1[n];
    const ScalarField& phi2 = lin.phi2[n];
    try {
      // Cahn-Hilliard-Oono part
      ScalarField coef = map_cc(s0.u, [S](double x) { return DoubleWell::fprime(x) - S; });
      ScalarField expl = phi2;
      multiply(expl, coef);
      ScalarField rhs = phi2;
      axpy(-dt, advect(s0.v, phi2), rhs);
      axpy(-dt, advect(phi1, s0.u), rhs);
      axpy(dt, laplace_cc(expl), rhs);
      ScalarField phi2_next = ops.solve_M(rhs, "linearized cho");

      ScalarField phi3_next = laplace_cc(phi2_next);
      scale(-1.0, phi3_next);
      axpy(1.0, expl, phi3_next);
      axpy(S, phi2_next, phi3_next);

      // Stokes part
      VectorField force = face_product(cells_to_faces(phi2_next), grad_cc(s1.w));
      force += face_product(cells_to_faces(s1.u), grad_cc(phi3_next));
      scale(-lambda, force);
      force += project_solenoidal(h[n], ops);
      axpy(-1.0, grad_cc(lin.pressure[n]), force);
      VectorField vrhs = phi1;
      axpy(dt, force, vrhs);
      VectorField phi1_star = ops.solve_H(std::move(vrhs), "linearized helmholtz");
      ScalarField d = div_fc(phi1_star);
      scale(-1.0 / dt, d);
      ScalarField psi = ops.solve_N(d, "linearized pressure");
      axpy(-dt, grad_cc(psi), phi1_star);
      ScalarField p_next = lin.pressure[n];
      p_next += psi;

      lin.phi1.push_back(std::move(phi1_star));
      lin.phi2.push_back(std::move(phi2_next));
      lin.phi3.push_back(std::move(phi3_next));
      lin.pressure.push_back(std::move(p_next));
    } catch (const SolverError& e) {
      throw SolverError(e.what(), n);
    } catch (const NumericalError& e) {
      throw SolverError(e.what(), n);
    }
  }
  return lin;
}

/// Relative superposition defect || L(a h1 + b h2) - a L h1 - b L h2 || / || L(a h1 + b h2) ||
/// in the L2(0,T) norm of (phi1, phi2), with a = 2, b = -3.
inline double linearity_defect(const Trajectory& base, const ControlSequence& h1, const ControlSequence& h2,
                               const SolverSettings& settings) {
  const double a = 2.0, b = -3.0;
  ControlSequence hc = h1;
  for (std::size_t n = 0; n < hc.size(); ++n) {
    scale(a, hc[n]);
    axpy(b, h2[n], hc[n]);
  }
  const LinTrajectory l1 = solve_linearized(base, h1, settings);
  const LinTrajectory l2 = solve_linearized(base, h2, settings);
  const LinTrajectory lc = solve_linearized(base, hc, settings);
  double num = 0.0, den = 0.0;
  const double dt = base.time.dt;
  for (int n = 1; n <= base.time.nt; ++n) {
    VectorField dv = lc.phi1[n];
    axpy(-a, l1.phi1[n], dv);
    axpy(-b, l2.phi1[n], dv);
    ScalarField du = lc.phi2[n];
    axpy(-a, l1.phi2[n], du);
    axpy(-b, l2.phi2[n], du);
    num += dt * (inner_face(dv, dv) + inner_cc(du, du));
    den += dt * (inner_face(lc.phi1[n], lc.phi1[n]) + inner_cc(lc.phi2[n], lc.phi2[n]));
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace scho
