#include "support.hpp"

#include "scho/adjoint.hpp"

using namespace scho;

namespace {

struct Setup {
  GridSpec g = make_grid(12, 10, 8.0, 6.0);
  PhysParams prm;
  TimeGrid tg = make_time_grid(0.04, 16);
  ScalarField u0{g};
  ControlSequence theta;
  Targets targets;

  explicit Setup(std::uint64_t seed) {
    SplitMix64 rng(seed);
    u0 = smooth_random_scalar(g, rng, 3, 0.8);
    for (int n = 0; n < tg.nt; ++n) theta.push_back(smooth_random_vector(g, rng));
    for (int n = 0; n <= tg.nt; ++n) {
      targets.u_d.push_back(random_scalar(g, rng, -0.5, 0.5));
      targets.v_d.push_back(random_vector(g, rng, -0.5, 0.5, false));
    }
  }
  Trajectory forward() const { return solve_forward(u0, VectorField(g), theta, g, prm, tg); }
};

ControlSequence direction(const GridSpec& g, const TimeGrid& tg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ControlSequence h;
  for (int n = 0; n < tg.nt; ++n) h.push_back(random_vector(g, rng, -1.0, 1.0, false));
  return h;
}

}  // namespace

TEST_CASE("matching targets give a zero adjoint") {
  const Setup s(1);
  const Trajectory tr = s.forward();
  const AdjTrajectory adj = solve_adjoint(tr, targets_from_trajectory(tr));
  for (int n = 0; n <= s.tg.nt; ++n) {
    CHECK(max_abs(adj.gamma1[n]) == 0.0);
    CHECK(max_abs(adj.gamma2[n]) == 0.0);
  }
}

TEST_CASE("terminal values and solenoidal gamma1") {
  const Setup s(2);
  const AdjTrajectory adj = solve_adjoint(s.forward(), s.targets);
  REQUIRE(adj.gamma1.size() == static_cast<std::size_t>(s.tg.nt + 1));
  CHECK(max_abs(adj.gamma1[s.tg.nt]) == 0.0);
  CHECK(max_abs(adj.gamma2[s.tg.nt]) == 0.0);
  double peak = 0.0;
  for (int n = 0; n < s.tg.nt; ++n) {
    CHECK(all_finite(adj.gamma1[n]));
    CHECK(is_admissible_velocity(adj.gamma1[n]));
    CHECK(max_abs(div_fc(adj.gamma1[n])) <= 1e-8 * (1.0 + max_abs(adj.gamma1[n])));
    peak = std::max(peak, max_abs(adj.gamma1[n]));
  }
  CHECK(peak > 0.0);
}

TEST_CASE("discrete duality with the linearized solver") {
  const Setup s(3);
  SolverSettings tight;
  tight.cg_tol = 1e-12;
  const Trajectory tr = s.forward();
  const AdjTrajectory adj = solve_adjoint(tr, s.targets, tight);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const ControlSequence h = direction(s.g, s.tg, 100 + k);
    const LinTrajectory lin = solve_linearized(tr, h, tight);
    const auto [lhs, rhs] = duality_pairings(tr, s.targets, adj, lin, h);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(std::abs(lhs), std::abs(rhs)));
  }
}

TEST_CASE("adjoint is affine in the targets") {
  const Setup a(4), b(5);
  const Trajectory tr = a.forward();
  const double s = 3.0;
  Targets mix;
  for (int n = 0; n <= a.tg.nt; ++n) {
    mix.u_d.push_back(s * a.targets.u_d[n] + (1.0 - s) * b.targets.u_d[n]);
    mix.v_d.push_back(s * a.targets.v_d[n] + (1.0 - s) * b.targets.v_d[n]);
  }
  SolverSettings tight;
  tight.cg_tol = 1e-12;
  const AdjTrajectory ga = solve_adjoint(tr, a.targets, tight);
  const AdjTrajectory gb = solve_adjoint(tr, b.targets, tight);
  const AdjTrajectory gm = solve_adjoint(tr, mix, tight);
  for (int n = 0; n < a.tg.nt; ++n) {
    const VectorField expect = s * ga.gamma1[n] + (1.0 - s) * gb.gamma1[n];
    CHECK(max_abs(gm.gamma1[n] - expect) <= 1e-9 * (1.0 + max_abs(expect)));
  }
}

TEST_CASE("target layout is validated") {
  const Setup s(6);
  Targets short_t = s.targets;
  short_t.u_d.resize(3);
  CHECK_THROWS_AS(solve_adjoint(s.forward(), short_t), ShapeError);
}
