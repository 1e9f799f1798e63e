#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include <llglab/initial_data.hpp>
#include <llglab/llg_direct.hpp>

#include "test_support.hpp"

using namespace llglab;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

namespace {

double sup_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(a[i] - b[i]));
  return m;
}

double l2_diff(const SpinField& a, const SpinField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 d = a[i] - b[i];
    s += dot(d, d);
  }
  return std::sqrt(s * a.grid().cell_volume());
}

LlgConfig config(const Grid& g, double lambda, double T, double dt_fraction, RkScheme s = RkScheme::rk4) {
  LlgConfig c;
  c.lambda = lambda;
  c.T = T;
  c.dt = dt_fraction * stability_cap(g, lambda);
  c.scheme = s;
  c.record_morrey = false;
  return c;
}

} // namespace

TEST_CASE("rhs of the equatorial map in closed form", "[llg]") {
  const Grid g = make_grid(1, 64, 2 * kPi);
  const auto m = equatorial_wave(g, 0.1);
  for (double lambda : {0.3, 1.0, 4.0}) {
    const auto r = llg_rhs(m, lambda);
    VectorField want(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.position(i)[0];
      const double th = 0.1 * std::sin(x), th2 = -0.1 * std::sin(x);
      // -m x Lap m = -(0, 0, th''), tension = th'' (-sin th, cos th, 0)
      want[i] = Vec3{-lambda * th2 * std::sin(th), lambda * th2 * std::cos(th), -th2};
    }
    CHECK(sup_diff(r, want) < 1e-8);
  }

  // Closed-form Lap m = th'' m_perp - th'^2 m against a fourth-order stencil of the exact map.
  const double h = 1e-3;
  for (double x : {0.3, 1.7, 4.0}) {
    auto mm = [](double y) {
      const double th = 0.1 * std::sin(y);
      return Vec3{std::cos(th), std::sin(th), 0.0};
    };
    const Vec3 fd = (1.0 / (12 * h * h)) * ((-1.0) * mm(x + 2 * h) + 16.0 * mm(x + h) - 30.0 * mm(x) + 16.0 * mm(x - h) - 1.0 * mm(x - 2 * h));
    const double th = 0.1 * std::sin(x), th1 = 0.1 * std::cos(x), th2 = -0.1 * std::sin(x);
    const Vec3 closed = th2 * Vec3{-std::sin(th), std::cos(th), 0.0} - (th1 * th1) * mm(x);
    CHECK(norm(fd - closed) < 1e-7);
  }
}

TEST_CASE("constant data is stationary", "[llg]") {
  const Grid g = make_grid(2, 16, 2 * kPi);
  const auto m = SpinField::constant(g, {0.0, 0.6, 0.8});
  CHECK(sup_norm(llg_rhs(m, 1.0)) == 0.0);
  const auto c = config(g, 1.0, 0.05, 1.0);
  const auto stepped = step(m, c);
  CHECK(sup_diff(stepped.field(), m.field()) < 1e-15);
  const auto res = solve_llg(m, c);
  for (double e : res.ledger.energies) CHECK(e == 0.0);
  const auto chk = check_energy_inequality(res.ledger, 1.0);
  CHECK(chk.violation == 0.0);
  CHECK(chk.pass);
  CHECK(check_equivalent_form(m, llg_rhs(m, 1.0), 1.0) == 0.0);
  for (double v : gradient_decay_series(res.trajectory).first) CHECK(v == 0.0);
}

TEST_CASE("tension identity, tangency and equivalent form", "[llg][property]") {
  for (int dim : {1, 2, 3}) {
    const Grid g = make_grid(dim, dim == 3 ? 32 : 64, 2 * kPi);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      INFO("dim " << dim << " seed " << seed);
      const auto m = test::random_admissible_spin(g, dim == 3 ? 0.15 : 0.4, seed);
      const auto lap = laplacian(m.field());
      const auto gm = gradient_magnitude(m);
      VectorField lhs(g), tension(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        lhs[i] = (-1.0) * cross(m[i], cross(m[i], lap[i]));
        tension[i] = lap[i] + (gm[i] * gm[i]) * m[i];
      }
      CHECK(sup_diff(lhs, tension) < 1e-8 * std::max(1.0, sup_norm(lap)));

      const double lambda = 0.5 + 0.5 * static_cast<double>(seed);
      const auto r = llg_rhs(m, lambda);
      double tang = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) tang = std::max(tang, std::abs(dot(r[i], m[i])));
      CHECK(tang <= 1e-10);
      CHECK(check_equivalent_form(m, r, lambda) < 1e-8);

      // Noise in d_t m shows up at its own size.
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      VectorField noisy = r;
      for (auto& v : noisy.values()) v = v + 1e-4 * Vec3{u(rng), u(rng), u(rng)};
      const double res = check_equivalent_form(m, noisy, lambda);
      CHECK(res > 1e-6);
      CHECK(res < 1e-3 * (1 + lambda));
    }
  }
}

TEST_CASE("large damping approaches the heat-flow direction", "[llg][property]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  const auto m = test::random_admissible_spin(g, 0.5, 11);
  const auto lap = laplacian(m.field());
  const auto gm = gradient_magnitude(m);
  double prev = kPi;
  for (double lambda : {10.0, 100.0, 1000.0}) {
    const auto r = llg_rhs(m, lambda);
    double dotp = 0.0, nr = 0.0, nt = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 t = lap[i] + (gm[i] * gm[i]) * m[i];
      const Vec3 q = (1.0 / lambda) * r[i];
      dotp += dot(q, t);
      nr += dot(q, q);
      nt += dot(t, t);
    }
    const double angle = std::acos(std::clamp(dotp / std::sqrt(nr * nt), -1.0, 1.0));
    CHECK(angle < prev);
    CHECK(angle * lambda == Approx(1.0).epsilon(1e-2));
    prev = angle;
  }
}

TEST_CASE("energy law for the equatorial wave", "[llg][energy]") {
  const Grid g = make_grid(1, 64, 2 * kPi);
  const auto m0 = equatorial_wave(g, 0.1);
  CHECK(dirichlet_energy(m0) == Approx(0.005 * kPi).margin(1e-6));
  CHECK(std::abs(dirichlet_energy(m0) - 0.015708) < 1e-6);

  auto c = config(g, 1.0, 1.0, 0.25);
  c.output_every = 512;
  c.record_morrey = true;
  const auto res = solve_llg(m0, c);
  REQUIRE(res.trajectory.times.back() == Approx(1.0));
  const auto chk = check_energy_inequality(res.ledger, 1.0);
  CHECK(chk.pass);
  CHECK(chk.monotone);
  CHECK(chk.equality_defect <= chk.tolerance);
  CHECK(res.ledger.energies.back() < res.ledger.energies.front());
  for (const auto& m : res.trajectory.states)
    for (const auto& v : m.field().values()) CHECK(std::abs(norm(v) - 1.0) < 1e-14);
  for (double v : res.ledger.morrey22) CHECK(std::isfinite(v));

  const auto csv = res.ledger.table().text();
  CHECK(csv.rfind("t,E,dissipation,sup_grad,morrey22\n", 0) == 0);
}

TEST_CASE("second-order convergence of the RK2 scheme", "[llg][convergence]") {
  const Grid g = make_grid(1, 32, 2 * kPi);
  const auto m0 = test::random_admissible_spin(g, 0.5, 3);
  const double T = 0.05;
  auto run = [&](double frac, RkScheme s) { return solve_llg(m0, config(g, 1.0, T, frac, s)).trajectory.back(); };
  const auto ref = run(1.0 / 16, RkScheme::rk4);
  const double e1 = l2_diff(run(1.0, RkScheme::rk2), ref);
  const double e2 = l2_diff(run(0.5, RkScheme::rk2), ref);
  const double e3 = l2_diff(run(0.25, RkScheme::rk2), ref);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e2 / e3 >= 3.5);
}

TEST_CASE("configuration validation and blow-up detection", "[llg][errors]") {
  const Grid g = make_grid(1, 32, 2 * kPi);
  const auto m = equatorial_wave(g, 0.1);
  auto c = config(g, 1.0, 0.1, 1.01);
  CHECK_THROWS_AS(solve_llg(m, c), InvalidArgument);
  c = config(g, 0.0, 0.1, 0.5);
  c.dt = 1e-6;
  CHECK_THROWS_AS(solve_llg(m, c), InvalidArgument);
  CHECK_THROWS_AS(parse_scheme("euler"), InvalidArgument);
  CHECK(parse_scheme("projected-rk2") == RkScheme::rk2);

  VectorField bad = m.field();
  bad[3] = Vec3{std::nan(""), 0.0, 0.0};
  CHECK_THROWS_AS(renormalize(bad, 0.25), BlowupSuspected);
  try {
    renormalize(bad, 0.25);
  } catch (const BlowupSuspected& e) {
    CHECK(e.last_good_time() == 0.25);
  }
}

TEST_CASE("local energy inequality on a smooth solution", "[llg][local]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  const auto m0 = bump_chart(g, 0.6, 0.12, {0.0, 0.0, 1.0});
  auto c = config(g, 1.0, 0.7, 1.0);
  c.output_every = 8;
  const auto res = solve_llg(m0, c);
  const std::size_t center = g.flat({16, 16, 0});
  std::vector<double> ratios;
  for (int rc : {4, 2}) {
    const CylinderSpec cyl{center, 0.7, rc};
    const auto cut = smooth_cutoff(g, center, rc * g.spacing());
    const auto rec = check_local_energy(res.trajectory, cyl, 1.0, cut);
    CHECK(rec.pass);
    CHECK(rec.margin > 0.0);
    CHECK(rec.constant == Approx(16.0));
    CHECK(std::isfinite(rec.half_cylinder_ratio));
    CHECK(rec.half_cylinder_ratio > 0.0);
    ratios.push_back(rec.half_cylinder_ratio);
  }
  CHECK(ratios[1] < 10.0 * ratios[0]);
  CHECK(ratios[0] < 10.0 * ratios[1]);

  // Constant trajectory: both sides vanish.
  const auto flat = solve_llg(SpinField::constant(g, {0.0, 0.0, 1.0}), c);
  const auto rec = check_local_energy(flat.trajectory, CylinderSpec{center, 0.7, 4}, 1.0,
                                      smooth_cutoff(g, center, 4 * g.spacing()));
  CHECK(rec.lhs == 0.0);
  CHECK(rec.rhs == 0.0);
  CHECK(rec.pass);

  CHECK_THROWS_AS(check_local_energy(res.trajectory, CylinderSpec{center, 0.1, 4}, 1.0,
                                     smooth_cutoff(g, center, 4 * g.spacing())),
                  CoverageError);
}

TEST_CASE("compensated gradient decay stays bounded", "[llg][decay]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  const auto raw = rough_raw(g, 0.05, {0.0, 0.0, 1.0}, 5);
  const auto m0 = mollify_and_project(raw, 2.0).projected;
  auto c = config(g, 1.0, 0.5, 0.25);
  c.output_every = 64;
  const auto res = solve_llg(m0, c);
  const auto d = gradient_decay_series(res.trajectory);
  const double b1 = *std::max_element(d.first.begin(), d.first.end());
  const double b2 = *std::max_element(d.second.begin(), d.second.end());
  CHECK(std::isfinite(b1));
  CHECK(std::isfinite(b2));
  CHECK(d.first.front() == 0.0);
  CHECK(check_energy_inequality(res.ledger, 1.0).pass);
}
