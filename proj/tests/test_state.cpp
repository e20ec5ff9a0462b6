#include "support.hpp"

#include "scho/state.hpp"

using namespace scho;
using scho::test::rel_diff;

namespace {

const GridSpec kUnit16 = make_grid(16, 16, 1.0, 1.0);

}  // namespace

TEST_CASE("parameter validation") {
  PhysParams p;
  CHECK(p.validate().empty());
  p.mu = 0.005;
  const auto w = p.validate();
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("mu > lambda") != std::string::npos);
  p = {};
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.alpha = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(make_time_grid(1.0, 0), ConfigError);
  CHECK_THROWS_AS(make_time_grid(-1.0, 10), ConfigError);
  const TimeGrid tg = make_time_grid(0.3, 7);
  CHECK(std::abs(tg.dt * tg.nt - tg.T) <= 1e-15);
}

TEST_CASE("step_cho: zero fixed point and uniform reduction") {
  PhysParams prm;
  prm.alpha = 0.5;
  const double dt = 1e-2;
  const StepOperators ops(kUnit16, prm, dt, {});
  auto [u0, w0] = step_cho(ScalarField(kUnit16), VectorField(kUnit16), ops);
  CHECK(max_abs(u0) == 0.0);
  CHECK(max_abs(w0) == 0.0);

  const double c = 0.4;
  auto [u1, w1] = step_cho(ScalarField(kUnit16, c), VectorField(kUnit16), ops);
  const double ue = c / (1.0 + prm.alpha * dt);
  const double we = DoubleWell::f(c) + prm.stab_S * (ue - c);
  for (double x : u1.values()) CHECK(x == Catch::Approx(ue).epsilon(1e-12));
  for (double x : w1.values()) CHECK(x == Catch::Approx(we).epsilon(1e-9));
}

TEST_CASE("step_cho: discrete mean recurrence") {
  SplitMix64 rng(9);
  PhysParams prm;
  prm.alpha = 0.5;
  const double dt = 1e-3;
  const StepOperators ops(kUnit16, prm, dt, {});
  const ScalarField u = random_scalar(kUnit16, rng);
  const VectorField v = random_vector(kUnit16, rng);
  auto [u1, w1] = step_cho(u, v, ops);
  CHECK(std::abs(mean_cc(u1) - mean_cc(u) / (1.0 + prm.alpha * dt)) <= 1e-11);
  // w+ reconstruction
  ScalarField w = laplace_cc(u1);
  scale(-1.0, w);
  axpy(1.0, map_cc(u, DoubleWell::f), w);
  axpy(prm.stab_S, u1 - u, w);
  CHECK(max_abs(w - w1) <= 1e-12 * max_abs(w));
}

TEST_CASE("step_stokes: zero forcing and projection residual") {
  SplitMix64 rng(10);
  PhysParams prm;
  const double dt = 1e-3;
  const StepOperators ops(kUnit16, prm, dt, {});
  // constant w: no surface force, and no control, no pressure, no velocity
  auto [v0, p0] = step_stokes(VectorField(kUnit16), ScalarField(kUnit16), random_scalar(kUnit16, rng),
                              ScalarField(kUnit16, 0.7), VectorField(kUnit16), ops);
  CHECK(max_abs(v0) == 0.0);
  CHECK(max_abs(p0) == 0.0);

  const VectorField theta = random_vector(kUnit16, rng, -1, 1, false);
  auto [v1, p1] = step_stokes(random_vector(kUnit16, rng), ScalarField(kUnit16), random_scalar(kUnit16, rng),
                              random_scalar(kUnit16, rng), theta, ops);
  CHECK(max_abs(div_fc(v1)) <= 1e-8);
  CHECK(is_admissible_velocity(v1));
}

TEST_CASE("pure-gradient control does not move the fluid") {
  SplitMix64 rng(11);
  PhysParams prm;
  const StepOperators ops(kUnit16, prm, 1e-3, {});
  VectorField theta = grad_cc(random_scalar(kUnit16, rng));
  auto [v, p] = step_stokes(VectorField(kUnit16), ScalarField(kUnit16), ScalarField(kUnit16),
                            ScalarField(kUnit16), theta, ops);
  CHECK(max_abs(v) <= 1e-9 * max_abs(theta));
  const VectorField proj = project_solenoidal(random_vector(kUnit16, rng, -1, 1, false), ops);
  CHECK(max_abs(div_fc(proj)) <= 1e-8);
  CHECK(max_abs(project_solenoidal(proj, ops) - proj) <= 1e-9);
}

TEST_CASE("energy functional") {
  PhysParams prm;
  prm.lambda = 0.01;
  Snapshot s{VectorField(kUnit16), ScalarField(kUnit16, 1.0), ScalarField(kUnit16), ScalarField(kUnit16)};
  CHECK(energy(s, prm) == 0.0);
  s.u = ScalarField(kUnit16);
  CHECK(energy(s, prm) == Catch::Approx(0.0025).epsilon(1e-14));

  SplitMix64 rng(12);
  const GridSpec g = make_grid(9, 7, 1.3, 0.8);
  Snapshot r{random_vector(g, rng), random_scalar(g, rng), ScalarField(g), ScalarField(g)};
  // independent double loop: kinetic with half weights on walls, gradient on interior faces
  const double a = g.hx * g.hy;
  double kin = 0.0, grad = 0.0, bulk = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double wgt = (i == 0 || i == g.nx) ? 0.5 : 1.0;
      kin += wgt * a * r.v.x(i, j) * r.v.x(i, j);
      if (i > 0 && i < g.nx) {
        const double d = (r.u(i, j) - r.u(i - 1, j)) / g.hx;
        grad += a * d * d;
      }
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double wgt = (j == 0 || j == g.ny) ? 0.5 : 1.0;
      kin += wgt * a * r.v.y(i, j) * r.v.y(i, j);
      if (j > 0 && j < g.ny) {
        const double d = (r.u(i, j) - r.u(i, j - 1)) / g.hy;
        grad += a * d * d;
      }
    }
  for (double x : r.u.values()) bulk += a * 0.25 * (x * x - 1) * (x * x - 1);
  const double oracle = 0.5 * kin + 0.5 * prm.lambda * grad + prm.lambda * bulk;
  CHECK(rel_diff(energy(r, prm), oracle) <= 1e-12);
}

TEST_CASE("solve_forward: zero data and uniform decay") {
  PhysParams prm;
  prm.alpha = 1.0;
  const TimeGrid tg = make_time_grid(1.0, 100);
  const Trajectory z = solve_forward(ScalarField(kUnit16), VectorField(kUnit16), zero_controls(kUnit16, tg), kUnit16,
                                     prm, tg);
  REQUIRE(z.snapshots.size() == 101);
  REQUIRE(z.diagnostics.size() == 101);
  for (const auto& s : z.snapshots) {
    CHECK(max_abs(s.u) == 0.0);
    CHECK(max_abs(s.v) == 0.0);
  }

  const double c = 0.5;
  const Trajectory t = solve_forward(ScalarField(kUnit16, c), VectorField(kUnit16), zero_controls(kUnit16, tg),
                                     kUnit16, prm, tg);
  CHECK(t.snapshots[0].u == ScalarField(kUnit16, c));
  for (int n = 0; n <= tg.nt; ++n) {
    const double expected = c * std::pow(1.01, -n);
    CHECK(std::abs(mean_cc(t.snapshots[n].u) - expected) <= 1e-12);
  }
  CHECK(mean_cc(t.snapshots[100].u) / c == Catch::Approx(0.369711).epsilon(1e-6));
}

TEST_CASE("solve_forward: mean decay under arbitrary control, divergence, energy") {
  SplitMix64 rng(13);
  PhysParams prm;
  prm.alpha = 0.3;
  const TimeGrid tg = make_time_grid(0.05, 50);
  ControlSequence th;
  for (int n = 0; n < tg.nt; ++n) th.push_back(random_vector(kUnit16, rng, -1, 1, false));
  const ScalarField u0 = random_scalar(kUnit16, rng);
  const Trajectory tr = solve_forward(u0, VectorField(kUnit16), th, kUnit16, prm, tg);
  const double m0 = mean_cc(u0);
  for (int n = 0; n <= tg.nt; ++n) {
    CHECK(std::abs(mean_cc(tr.snapshots[n].u) - m0 * std::pow(1.0 + prm.alpha * tg.dt, -n)) <= 1e-10 * (n + 1));
    CHECK(tr.diagnostics[n].div_inf <= 1e-8);
    CHECK(is_admissible_velocity(tr.snapshots[n].v));
  }

  const Trajectory free = solve_forward(u0, VectorField(kUnit16), zero_controls(kUnit16, tg), kUnit16, prm, tg);
  const double E0 = free.diagnostics[0].energy;
  for (int n = 0; n < tg.nt; ++n) {
    CHECK(free.diagnostics[n + 1].energy <= free.diagnostics[n].energy + 1e-8 * (1.0 + E0));
  }
}

TEST_CASE("solve_forward: input errors") {
  const TimeGrid tg = make_time_grid(0.01, 4);
  PhysParams prm;
  VectorField v(kUnit16);
  v.x(0, 2) = 1.0;
  CHECK_THROWS_AS(solve_forward(ScalarField(kUnit16), v, zero_controls(kUnit16, tg), kUnit16, prm, tg),
                  PreconditionError);
  ScalarField u(kUnit16);
  u(1, 1) = INFINITY;
  CHECK_THROWS_AS(solve_forward(u, VectorField(kUnit16), zero_controls(kUnit16, tg), kUnit16, prm, tg),
                  NumericalError);
  CHECK_THROWS_AS(solve_forward(ScalarField(kUnit16), VectorField(kUnit16), ControlSequence(3, VectorField(kUnit16)),
                                kUnit16, prm, tg),
                  ShapeError);
  SolverSettings tiny;
  tiny.memory_budget_bytes = 1000;
  CHECK_THROWS_AS(solve_forward(ScalarField(kUnit16), VectorField(kUnit16), zero_controls(kUnit16, tg), kUnit16, prm,
                                tg, tiny),
                  ConfigError);
  SolverSettings starved;
  starved.cg_maxiter = 1;
  SplitMix64 rng(1);
  try {
    solve_forward(random_scalar(kUnit16, rng), VectorField(kUnit16), zero_controls(kUnit16, tg), kUnit16, prm, tg,
                  starved);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.step == 0);
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("lipschitz probe") {
  SplitMix64 rng(14);
  PhysParams prm;
  const GridSpec g = make_grid(12, 12, 1.0, 1.0);
  const TimeGrid tg = make_time_grid(0.05, 25);
  const ScalarField u0 = random_scalar(g, rng, -0.5, 0.5);
  ControlSequence a, h;
  for (int n = 0; n < tg.nt; ++n) {
    a.push_back(random_vector(g, rng));
    h.push_back(random_vector(g, rng));
  }
  const auto same = lipschitz_probe(a, a, u0, VectorField(g), g, prm, tg);
  CHECK(same.identical_controls);
  CHECK(same.ratio == 0.0);

  std::vector<double> ratios;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    ControlSequence b = a;
    for (int n = 0; n < tg.nt; ++n) axpy(eps, h[n], b[n]);
    ratios.push_back(lipschitz_probe(a, b, u0, VectorField(g), g, prm, tg).ratio);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo <= 1.2);
  CHECK(std::isfinite(*hi));
}
