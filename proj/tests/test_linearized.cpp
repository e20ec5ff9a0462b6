#include "support.hpp"

#include "scho/control.hpp"
#include "scho/linearized.hpp"

using namespace scho;

namespace {

struct Setup {
  GridSpec g = make_grid(12, 12, 8.0, 8.0);
  PhysParams prm;
  TimeGrid tg = make_time_grid(0.5, 20);
  ScalarField u0{g};
  ControlSequence theta, h1, h2;

  explicit Setup(std::uint64_t seed) {
    SplitMix64 rng(seed);
    u0 = smooth_random_scalar(g, rng, 3, 0.8);
    for (int n = 0; n < tg.nt; ++n) {
      theta.push_back(smooth_random_vector(g, rng));
      h1.push_back(smooth_random_vector(g, rng, 3, 5.0));
      h2.push_back(random_vector(g, rng));
    }
  }
  Trajectory forward(const ControlSequence& th) const {
    return solve_forward(u0, VectorField(g), th, g, prm, tg);
  }
};

}  // namespace

TEST_CASE("zero direction gives a zero response") {
  const Setup s(1);
  const Trajectory base = s.forward(s.theta);
  const LinTrajectory lin = solve_linearized(base, zero_controls(s.g, s.tg));
  REQUIRE(lin.phi1.size() == static_cast<std::size_t>(s.tg.nt + 1));
  for (int n = 0; n <= s.tg.nt; ++n) {
    CHECK(max_abs(lin.phi1[n]) == 0.0);
    CHECK(max_abs(lin.phi2[n]) == 0.0);
  }
}

TEST_CASE("response scales and superposes") {
  const Setup s(2);
  const Trajectory base = s.forward(s.theta);
  SolverSettings tight;
  tight.cg_tol = 1e-12;
  const LinTrajectory a = solve_linearized(base, s.h1, tight);
  ControlSequence h2x = s.h1;
  for (auto& f : h2x) scale(2.0, f);
  const LinTrajectory b = solve_linearized(base, h2x, tight);
  for (int n = 1; n <= s.tg.nt; ++n) {
    CHECK(max_abs(b.phi1[n] - 2.0 * a.phi1[n]) <= 1e-9 * (1.0 + max_abs(b.phi1[n])));
    CHECK(max_abs(b.phi2[n] - 2.0 * a.phi2[n]) <= 1e-9 * (1.0 + max_abs(b.phi2[n])));
  }
  CHECK(linearity_defect(base, s.h1, s.h2, tight) <= 1e-10);
}

TEST_CASE("structural properties of the response") {
  const Setup s(3);
  const Trajectory base = s.forward(s.theta);
  const LinTrajectory lin = solve_linearized(base, s.h2);
  double peak = 0.0;
  for (int n = 0; n <= s.tg.nt; ++n) {
    CHECK(std::abs(mean_cc(lin.phi2[n])) <= 1e-12);
    CHECK(max_abs(div_fc(lin.phi1[n])) <= 1e-8);
    CHECK(is_admissible_velocity(lin.phi1[n]));
    peak = std::max(peak, max_abs(lin.phi1[n]));
  }
  CHECK(peak > 0.0);
}

TEST_CASE("input validation") {
  const Setup s(4);
  Trajectory base = s.forward(s.theta);
  CHECK_THROWS_AS(solve_linearized(base, ControlSequence(3, VectorField(s.g))), ShapeError);
  base.snapshots.pop_back();
  CHECK_THROWS_AS(solve_linearized(base, s.h1), ShapeError);
}

TEST_CASE("state remainder is second order") {
  const Setup s(5);
  ReducedProblem prob{s.u0, VectorField(s.g), s.g, s.prm, s.tg, {}, {}};
  prob.cp.targets = targets_from_trajectory(s.forward(zero_controls(s.g, s.tg)));
  const TaylorReport rep = linearized_taylor_test(prob, s.theta, s.h1);
  REQUIRE(rep.orders.size() == 3);
  CHECK(rep.directional > 0.0);
  const double order = asymptotic_order(rep, 1e-11 * rep.directional);
  CHECK(order == Catch::Approx(2.0).margin(0.2));
}
