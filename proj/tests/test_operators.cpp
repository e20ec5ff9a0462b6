#include "support.hpp"

#include "scho/operators.hpp"

using namespace scho;
using scho::test::rel_diff;

namespace {

ScalarField sample_cc(const GridSpec& g, auto&& f) {
  ScalarField u(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u(i, j) = f(g.xc(i), g.yc(j));
  return u;
}

VectorField sample_faces(const GridSpec& g, auto&& fx, auto&& fy) {
  VectorField v(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) v.x(i, j) = fx(g.xf(i), g.yc(j));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v.y(i, j) = fy(g.xc(i), g.yf(j));
  return v;
}

}  // namespace

TEST_CASE("double-well potential") {
  CHECK(DoubleWell::F(1.0) == 0.0);
  CHECK(DoubleWell::F(0.0) == 0.25);
  CHECK(DoubleWell::f(2.0) == 6.0);
  CHECK(DoubleWell::fprime(1.0) == 2.0);
  CHECK(DoubleWell::fsecond(0.5) == 3.0);
  // f = F' by central differences; the O(eps^2) error of a quartic is eps^2 F'''(s)/6 = eps^2 s.
  const double eps = 1e-4;
  for (double s = -2.0; s <= 2.0; s += 0.125) {
    const double fd = (DoubleWell::F(s + eps) - DoubleWell::F(s - eps)) / (2 * eps);
    CHECK(std::abs(fd - DoubleWell::f(s)) <= 4.0 * eps * eps + 1e-11);
    const double fd2 = (DoubleWell::f(s + eps) - DoubleWell::f(s - eps)) / (2 * eps);
    CHECK(std::abs(fd2 - DoubleWell::fprime(s)) <= 2.0 * eps * eps + 1e-10);
  }
}

TEST_CASE("gradient of constant and linear fields") {
  const GridSpec g = make_grid(8, 8, 1.0, 1.0);
  CHECK(max_abs(grad_cc(ScalarField(g, 3.0))) == 0.0);
  const VectorField gx = grad_cc(sample_cc(g, [](double x, double) { return x; }));
  for (int j = 0; j < g.ny; ++j) {
    CHECK(gx.x(0, j) == 0.0);
    CHECK(gx.x(g.nx, j) == 0.0);
    for (int i = 1; i < g.nx; ++i) CHECK(gx.x(i, j) == Catch::Approx(1.0).epsilon(1e-14));
  }
  CHECK(max_abs(gx.yvals()) == 0.0);
}

TEST_CASE("divergence examples") {
  const GridSpec g = make_grid(8, 8, 1.0, 1.0);
  VectorField c(g);
  for (double& x : c.xvals()) x = 0.3;
  for (double& x : c.yvals()) x = -1.7;
  zero_boundary_normal(c);
  CHECK(std::abs(mean_cc(div_fc(c))) <= 1e-15);

  const VectorField sol = sample_faces(g, [](double x, double) { return x; }, [](double, double y) { return -y; });
  CHECK(max_abs(div_fc(sol)) <= 1e-12);
  const ScalarField two = div_fc(sample_faces(g, [](double x, double) { return x; }, [](double, double y) { return y; }));
  for (double x : two.values()) CHECK(x == Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("summation by parts with wall weights") {
  SplitMix64 rng(11);
  for (auto [nx, ny, Lx, Ly] : {std::tuple{8, 8, 1.0, 1.0}, std::tuple{12, 5, 3.0, 0.7}}) {
    const GridSpec g = make_grid(nx, ny, Lx, Ly);
    const ScalarField u = random_scalar(g, rng);
    const VectorField psi = random_vector(g, rng);
    const double lhs = inner_face(grad_cc(u), psi);
    const double rhs = -inner_cc(u, div_fc(psi));
    CHECK(rel_diff(lhs, rhs) <= 1e-12);
    // Independent brute-force version of the face pairing: boundary-normal
    // entries of grad u vanish, so only interior faces with full weight enter.
    const VectorField gu = grad_cc(u);
    double brute = 0.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 1; i < nx; ++i) brute += gu.x(i, j) * psi.x(i, j) * g.hx * g.hy;
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) brute += gu.y(i, j) * psi.y(i, j) * g.hx * g.hy;
    CHECK(rel_diff(brute, lhs) <= 1e-12);
  }
}

TEST_CASE("cell Laplacian") {
  const GridSpec g = make_grid(10, 9, 1.0, 1.3);
  CHECK(max_abs(laplace_cc(ScalarField(g, 2.5))) == 0.0);
  const ScalarField q = laplace_cc(sample_cc(g, [](double x, double) { return x * x; }));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) CHECK(q(i, j) == Catch::Approx(2.0).epsilon(1e-10));
  SplitMix64 rng(5);
  const ScalarField u = random_scalar(g, rng);
  const ScalarField a = laplace_cc(u);
  const ScalarField b = div_fc(grad_cc(u));
  CHECK(max_abs(a - b) <= 1e-13 * max_abs(a));
  CHECK(std::abs(mean_cc(a)) <= 1e-13 * max_abs(a));
}

TEST_CASE("face Laplacian stencil and coercivity") {
  const GridSpec g = make_grid(8, 8, 1.0, 1.0);
  CHECK(max_abs(laplace_face(VectorField(g))) == 0.0);
  VectorField e(g);
  e.x(4, 4) = 1.0;
  const VectorField le = laplace_face(e);
  const double ih2 = 1.0 / (g.hx * g.hx);
  CHECK(le.x(4, 4) == Catch::Approx(-4.0 * ih2));
  CHECK(le.x(3, 4) == Catch::Approx(ih2));
  CHECK(le.x(5, 4) == Catch::Approx(ih2));
  CHECK(le.x(4, 3) == Catch::Approx(ih2));
  CHECK(le.x(4, 5) == Catch::Approx(ih2));
  CHECK(max_abs(le.yvals()) == 0.0);

  SplitMix64 rng(8);
  for (int k = 0; k < 5; ++k) {
    const VectorField v = random_vector(g, rng);
    CHECK(-inner_face(laplace_face(v), v) >= 0.0);
    // symmetry in the face inner product
    const VectorField w = random_vector(g, rng);
    CHECK(rel_diff(inner_face(laplace_face(v), w), inner_face(v, laplace_face(w))) <= 1e-12);
  }
}

TEST_CASE("interpolation pair is adjoint") {
  SplitMix64 rng(21);
  const GridSpec g = make_grid(9, 6, 1.5, 1.0);
  const ScalarField u = random_scalar(g, rng);
  const VectorField v = random_vector(g, rng, -1, 1, false);
  CHECK(rel_diff(inner_face(cells_to_faces(u), v), inner_cc(u, faces_to_cells(v))) <= 1e-12);
  const VectorField cu = cells_to_faces(ScalarField(g, 2.0));
  CHECK(cu.x(3, 2) == 2.0);
  CHECK(cu.x(0, 2) == 0.0);
}

TEST_CASE("advection") {
  SplitMix64 rng(3);
  const GridSpec g = make_grid(12, 12, 1.0, 1.0);
  const ScalarField u = random_scalar(g, rng);
  CHECK(max_abs(advect(VectorField(g), u)) == 0.0);
  for (int k = 0; k < 5; ++k) {
    const VectorField v = random_vector(g, rng);
    const ScalarField a = advect(v, random_scalar(g, rng));
    CHECK(std::abs(mean_cc(a)) <= 1e-13 * (1.0 + max_abs(a)));
  }
  // a discretely solenoidal v (discrete curl of a stream function on nodes)
  VectorField sol(g);
  auto psi = [&](int i, int j) { return std::sin(0.7 * i) * std::cos(0.3 * j) * i * (g.nx - i) * j * (g.ny - j); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) sol.x(i, j) = (psi(i, j + 1) - psi(i, j)) / g.hy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) sol.y(i, j) = -(psi(i + 1, j) - psi(i, j)) / g.hx;
  REQUIRE(is_admissible_velocity(sol, 1e-12));
  zero_boundary_normal(sol);
  REQUIRE(max_abs(div_fc(sol)) <= 1e-9);
  CHECK(max_abs(advect(sol, ScalarField(g, 1.3))) <= 1e-8);

  VectorField bad(g);
  bad.x(0, 3) = 1e-10;
  CHECK_THROWS_AS(advect(bad, u), PreconditionError);
}

TEST_CASE("surface force") {
  const GridSpec g = make_grid(8, 8, 1.0, 1.0);
  SplitMix64 rng(4);
  const ScalarField u = random_scalar(g, rng);
  CHECK(max_abs(surface_force(u, ScalarField(g, 2.0), 0.01)) == 0.0);
  CHECK(max_abs(surface_force(ScalarField(g), random_scalar(g, rng), 0.01)) == 0.0);
  const VectorField f = surface_force(ScalarField(g, 1.0), sample_cc(g, [](double x, double) { return x; }), 0.01);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) CHECK(f.x(i, j) == Catch::Approx(-0.01).epsilon(1e-12));
  CHECK(is_admissible_velocity(f));
}

TEST_CASE("quadrature and means") {
  const GridSpec unit = make_grid(8, 8, 1.0, 1.0);
  CHECK(inner_cc(ScalarField(unit, 1.0), ScalarField(unit, 1.0)) == Catch::Approx(1.0));
  CHECK(mean_cc(ScalarField(unit, 1.0)) == Catch::Approx(1.0));
  CHECK(inner_cc(ScalarField(unit, 2.0), ScalarField(unit, 3.0)) == Catch::Approx(6.0));
  // constant face field: interior faces full weight, wall faces half weight -> exact area per component
  CHECK(inner_face(VectorField(unit, 1.0), VectorField(unit, 1.0)) == Catch::Approx(2.0));

  SplitMix64 rng(6);
  const GridSpec g = make_grid(7, 5, 2.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const ScalarField a = random_scalar(g, rng);
    CHECK(inner_cc(a, a) > 0.0);
  }
  CHECK(inner_cc(ScalarField(g), ScalarField(g)) == 0.0);
  ScalarField m = random_scalar(g, rng);
  remove_mean(m);
  CHECK(std::abs(mean_cc(m)) <= 1e-15);
  CHECK_THROWS_AS(inner_cc(ScalarField(g), ScalarField(unit)), ShapeError);
}
