#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <llglab/cgl_mild.hpp>

#include "test_support.hpp"

using namespace llglab;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

namespace {

ComplexField gaussian(const Grid& g, double w, double kx, double ky) {
  const double c = 0.5 * g.box_length();
  return ComplexField::generate(g, [&](const auto& x) {
    const double r2 = (x[0] - c) * (x[0] - c) + (x[1] - c) * (x[1] - c);
    return std::exp(-r2 / (2 * w * w)) * std::exp(Complex(0.0, kx * x[0] + ky * x[1]));
  });
}

/// Localized two-component data with M^{2,2} norm `target`.
ComplexTuple localized_data(const Grid& g, double target) {
  ComplexTuple v{gaussian(g, 0.4, 0, 0), kI * gaussian(g, 0.4, 0, 1)};
  return scaled(target / morrey22(v, make_lattice(g)), v);
}

double tuple_sup_diff(const ComplexTuple& a, const ComplexTuple& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, test::max_abs_diff(a[c], b[c]));
  return m;
}

} // namespace

TEST_CASE("exponent windows", "[cgl][window]") {
  const auto ok = exponent_window_check(3.2);
  CHECK(ok.valid);
  CHECK(ok.first_failure.empty());
  REQUIRE(ok.pairs.size() == 9);
  for (const auto& pr : ok.pairs) {
    CHECK(pr.valid);
    CHECK(pr.beta == Approx(std::beta(1.0 - pr.d1, 1.0 - pr.d2)).epsilon(1e-8));
  }

  const auto at3 = exponent_window_check(3.0);
  CHECK_FALSE(at3.valid);
  CHECK(at3.first_failure == "cubic/R2");
  CHECK(at3.pairs[1].d1 == 1.0);

  const auto at103 = exponent_window_check(10.0 / 3.0);
  CHECK_FALSE(at103.valid);
  CHECK(at103.first_failure == "quintic/R1");
  CHECK(at103.pairs[6].d2 == Approx(1.0));

  // 200-point scan of (2.5, 4): valid exactly inside (3, 10/3).
  for (int i = 0; i < 200; ++i) {
    const double p = 2.5 + 1.5 * (i + 0.5) / 200.0;
    CHECK(exponent_window_check(p).valid == (p > 3.0 && p < 10.0 / 3.0));
  }
  CHECK_THROWS_AS(exponent_window_check(2.0), InvalidArgument);
  CHECK(beta_quadrature(0.0, 0.0) == Approx(1.0).epsilon(1e-12));
  CHECK(beta_quadrature(0.5, 0.5) == Approx(kPi).epsilon(1e-8));
}

TEST_CASE("nonlinearity against a direct evaluation", "[cgl][nonlinearity]") {
  const Grid g = make_grid(2, 16, 2 * kPi);
  const double lambda = 0.8;
  const ComplexTuple zero = zero_tuple(g, 2);
  const std::vector<ScalarField> a{test::random_band_limited_real(g, 3, 5), test::random_band_limited_real(g, 3, 6)};
  const auto a01 = test::random_band_limited_real(g, 3, 7), a02 = test::random_band_limited_real(g, 3, 8);
  CHECK(sup_norm(nonlinearity_F(zero, a, a01, a02, lambda)) == 0.0);

  // Single nonzero component: u_1 conj(u_1) is real, so the cubic part vanishes.
  const ComplexTuple single{test::random_band_limited(g, 3, 9), ComplexField(g)};
  CHECK(sup_norm(nonlinearity_parts(single, a, a01, a02, lambda).cubic) < 1e-15);
  const std::vector<ScalarField> no_a{ScalarField(g), ScalarField(g)};
  CHECK(sup_norm(nonlinearity_F(single, no_a, ScalarField(g), ScalarField(g), lambda)) == 0.0);

  const ComplexTuple u{test::random_band_limited(g, 3, 1), test::random_band_limited(g, 3, 2)};
  const auto F = nonlinearity_F(u, a, a01, a02, lambda);
  const auto dx0 = derivative(u[0], 0, 1), dy0 = derivative(u[0], 1, 1);
  const auto dx1 = derivative(u[1], 0, 1), dy1 = derivative(u[1], 1, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Complex u1 = u[0][i], u2 = u[1][i];
    const double ax = a[0][i], ay = a[1][i];
    const Complex w = Complex(lambda, -1.0);
    const Complex F1 = w * (Complex(0, 1) * ((u1 * std::conj(u1)).imag() * u1 + (u1 * std::conj(u2)).imag() * u2) +
                            Complex(0, 2) * (ax * dx0[i] + ay * dy0[i]) - (ax * ax + ay * ay) * u1) -
                       Complex(0, 1) * (a01[i] + a02[i]) * u1;
    const Complex F2 = w * (Complex(0, 1) * ((u2 * std::conj(u1)).imag() * u1 + (u2 * std::conj(u2)).imag() * u2) +
                            Complex(0, 2) * (ax * dx1[i] + ay * dy1[i]) - (ax * ax + ay * ay) * u2) -
                       Complex(0, 1) * (a01[i] + a02[i]) * u2;
    worst = std::max({worst, std::abs(F1 - F[0][i]), std::abs(F2 - F[1][i])});
  }
  CHECK(worst < 1e-12 * std::max(1.0, sup_norm(F)));

  const auto parts = nonlinearity_parts(u, a, a01, a02, lambda);
  CHECK(tuple_sup_diff(parts.cubic + parts.derivative + parts.quintic, parts.total) == 0.0);
  CHECK_THROWS_AS(nonlinearity_F(u, {a[0]}, a01, a02, lambda), InvalidArgument);
}

TEST_CASE("Picard iteration on trivial and plane-wave data", "[cgl][picard]") {
  const Grid g = make_grid(2, 16, 2 * kPi);
  CglConfig c;
  c.time_steps = 4;
  c.duhamel_substeps = 2;
  const auto r0 = picard_iterate(zero_tuple(g, 2), c);
  CHECK(r0.iterations == 1);
  CHECK(r0.converged);
  for (const auto& s : r0.trajectory.states) CHECK(sup_norm(s) == 0.0);

  // A single plane wave carries no nonlinearity: the free evolution is already the fixed point.
  const auto e = ComplexField::generate(g, [](const auto& x) { return 1e-3 * std::exp(Complex(0.0, x[0])); });
  const ComplexTuple v0{e, ComplexField(g)};
  const auto r = picard_iterate(v0, c);
  CHECK(r.converged);
  CHECK(r.increments().front() < 1e-15);
  const Complex f = std::exp(Complex(-c.lambda, 1.0) * c.T);
  CHECK(test::max_abs_diff(r.trajectory.back()[0], f * e) < 1e-15);
  CHECK(r.trajectory.times.front() == 0.0);
  CHECK(r.trajectory.times.back() == Approx(c.T));
  CHECK(r.trajectory.size() == 5);

  auto bad = c;
  bad.p = 3.0;
  CHECK_THROWS_AS(picard_iterate(v0, bad), InvalidArgument);
  bad = c;
  bad.time_steps = 0;
  CHECK_THROWS_AS(picard_iterate(v0, bad), InvalidArgument);
  CHECK_THROWS_AS(picard_iterate(ComplexTuple{e}, c), InvalidArgument);
}

TEST_CASE("Picard contraction on small localized data", "[cgl][picard]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  const auto v0 = localized_data(g, 1e-3);
  CglConfig c;
  c.picard_tol = 1e-15;
  const auto r = picard_iterate(v0, c);
  CHECK(r.converged);
  CHECK(r.warnings.empty());
  CHECK(r.v0_norm == Approx(1e-3));
  const auto inc = r.increments();
  REQUIRE(inc.size() >= 2);
  for (std::size_t j = 1; j < inc.size(); ++j) CHECK(inc[j] < 0.5 * inc[j - 1]);
  CHECK(fixed_point_residual(v0, c, r) <= 10 * c.picard_tol);
  CHECK(r.div_a_residual <= 1e-10);
  CHECK(r.log.size() == inc.size());
  CHECK(r.xpt.R3 > 0.0);

  // Smallness persists along the trajectory.
  const BallLattice lat = make_lattice(g);
  double sup_m22 = 0.0;
  for (const auto& s : r.trajectory.states) sup_m22 = std::max(sup_m22, morrey22(s, lat));
  CHECK(sup_m22 <= 10.0 * r.v0_norm);

  const auto csv = r.log_table().text();
  CHECK(csv.rfind("iter,increment,xpt_R1,xpt_R2,xpt_R3\n", 0) == 0);
}

TEST_CASE("large data is reported as non-contracting", "[cgl][picard][errors]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  CglConfig c;
  c.log_xpt = false;
  // Norm 8 is above the measured contraction threshold of this profile.
  const auto big = localized_data(g, 8.0);
  CHECK_THROWS_AS(picard_iterate(big, c), NonContraction);

  // Norm 1 still contracts but draws a smallness warning.
  c.picard_tol = 1e-10;
  const auto mid = picard_iterate(localized_data(g, 1.0), c);
  CHECK(mid.converged);
  CHECK_FALSE(mid.warnings.empty());
}

TEST_CASE("Duhamel substep refinement is second order", "[cgl][convergence]") {
  const Grid g = make_grid(2, 16, 2 * kPi);
  // Moderate amplitude so the nonlinear part is well above round-off.
  ComplexTuple v0{test::random_band_limited(g, 2, 3), test::random_band_limited(g, 2, 4)};
  v0 = scaled(0.5 / morrey22(v0, make_lattice(g)), v0);
  CglConfig c;
  c.T = 0.2;
  c.time_steps = 2;
  c.picard_tol = 1e-14;
  c.log_xpt = false;
  auto final_state = [&](int sub) {
    auto cc = c;
    cc.duhamel_substeps = sub;
    return picard_iterate(v0, cc).trajectory.back();
  };
  const auto ref = final_state(64);
  const double e1 = tuple_sup_diff(final_state(2), ref);
  const double e2 = tuple_sup_diff(final_state(4), ref);
  const double e3 = tuple_sup_diff(final_state(8), ref);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e2 / e3 >= 3.5);
}

TEST_CASE("stability of the solution map", "[cgl][stability]") {
  const Grid g = make_grid(2, 16, 2 * kPi);
  CglConfig c;
  c.time_steps = 8;
  c.duhamel_substeps = 2;
  c.picard_tol = 1e-14;
  const auto v0 = localized_data(g, 1e-2);
  const auto dir = ComplexTuple{ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, 2.0 * x[0])); }),
                                ComplexField(g)};
  const auto rec = stability_experiment(v0, dir, 1e-3, 2, c);
  REQUIRE(rec.ratios.size() == 3);
  CHECK(rec.deltas[2] == Approx(2.5e-4));
  CHECK(rec.spread <= 0.25);
  for (double r : rec.ratios) CHECK(std::isfinite(r));

  CHECK(stability_pair(v0, v0, c).zero_difference);

  // From zero data the response is linear in delta.
  const auto z = zero_tuple(g, 2);
  const auto bump = localized_data(g, 1.0);
  const auto small = stability_pair(z, scaled(1e-3, bump), c);
  const auto smaller = stability_pair(z, scaled(5e-4, bump), c);
  CHECK(small.ratios[0] == Approx(smaller.ratios[0]).epsilon(1e-2));
}
