#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include <llglab/semigroup.hpp>

#include "test_support.hpp"

using namespace llglab;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

TEST_CASE("semigroup on a Fourier mode", "[semigroup]") {
  const Grid g = make_grid(1, 16, 2 * kPi);
  const SemigroupParams sp{1.0};
  const auto e = ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, x[0])); });
  const auto s = apply_semigroup(e, 0.5, sp);
  const Complex factor = std::exp(Complex(-1.0, 1.0) * 0.5);
  CHECK(std::abs(factor) == Approx(0.60653).epsilon(1e-5));
  CHECK(test::max_abs_diff(s, factor * e) < 1e-12);

  const auto f = test::random_band_limited(g, 5, 3);
  CHECK(test::max_abs_diff(apply_semigroup(f, 0.0, sp), f) == 0.0);
  CHECK_THROWS_AS(apply_semigroup(f, -0.1, sp), InvalidArgument);
  CHECK_THROWS_AS(apply_semigroup(f, 0.1, SemigroupParams{0.0}), InvalidArgument);
}

TEST_CASE("semigroup law, linearity and mean preservation", "[semigroup][property]") {
  const SemigroupParams sp{0.7};
  for (int dim : {1, 2, 3}) {
    const Grid g = make_grid(dim, dim == 3 ? 8 : 32, 2 * kPi);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto f = test::random_band_limited(g, 3, seed);
      const auto h = test::random_band_limited(g, 3, seed + 50);
      const double t1 = 0.013 * static_cast<double>(seed), t2 = 0.029;
      const auto lhs = apply_semigroup(apply_semigroup(f, t1, sp), t2, sp);
      const auto rhs = apply_semigroup(f, t1 + t2, sp);
      CHECK(test::max_abs_diff(lhs, rhs) < 1e-12 * sup_norm(f));

      const Complex a{0.3, -1.2};
      const auto lin = apply_semigroup(a * f + h, t2, sp);
      CHECK(test::max_abs_diff(lin, a * apply_semigroup(f, t2, sp) + apply_semigroup(h, t2, sp)) < 1e-12 * sup_norm(lin));

      CHECK(std::abs(mean(apply_semigroup(f, t2, sp)) - mean(f)) < 1e-13 * sup_norm(f));

      double prev = l2_norm(f);
      for (double t : {0.01, 0.02, 0.05, 0.1}) {
        const double nrm = l2_norm(apply_semigroup(f, t, sp));
        CHECK(nrm < prev);
        prev = nrm;
      }
    }
  }
}

TEST_CASE("gradient of the semigroup", "[semigroup]") {
  const Grid g = make_grid(1, 16, 2 * kPi);
  const SemigroupParams sp{1.0};
  const auto e = ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, x[0])); });
  CHECK(test::max_abs_diff(apply_grad_semigroup(e, 0.0, sp)[0], kI * e) < 1e-12);
  const auto c = ComplexField::generate(g, [](const auto&) { return Complex(2.0, -1.0); });
  CHECK(sup_norm(apply_grad_semigroup(c, 0.3, sp)[0]) < 1e-13);

  const Grid g2 = make_grid(2, 16, 2 * kPi);
  const auto f = test::random_band_limited(g2, 4, 8);
  const auto a = apply_grad_semigroup(f, 0.04, sp);
  const auto b = gradient(apply_semigroup(f, 0.04, sp));
  for (std::size_t k = 0; k < 2; ++k) CHECK(test::max_abs_diff(a[k], b[k]) == 0.0);
  CHECK_THROWS_AS(apply_grad_semigroup(f, -1.0, sp), InvalidArgument);
}

TEST_CASE("Duhamel quadrature", "[semigroup][duhamel]") {
  const Grid g = make_grid(1, 16, 2 * kPi);
  const SemigroupParams sp{1.0};
  const auto zero = duhamel_integral([&](double) { return ComplexField(g); }, 0.5, 8, sp);
  CHECK(sup_norm(zero) == 0.0);

  const auto e = ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, x[0])); });
  const double t = 0.5;
  const Complex exact_factor = (1.0 - std::exp(Complex(-1.0, 1.0) * t)) / Complex(1.0, -1.0);
  const auto d = duhamel_integral([&](double) { return e; }, t, 64, sp);
  CHECK(test::max_abs_diff(d, exact_factor * e) < 1e-4 * std::abs(exact_factor));

  // Smooth time-dependent forcing: F(s) = cos(3s) e^{2ix}; exact per-mode integral.
  const auto e2 = ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, 2.0 * x[0])); });
  const Complex mu = Complex(-1.0, 1.0) * 4.0;
  // int_0^t e^{mu (t-s)} cos(3s) ds
  const Complex exact = (std::exp(mu * t) * mu - mu * std::cos(3 * t) + 3.0 * std::sin(3 * t)) / (mu * mu + 9.0);
  auto err = [&](int steps) {
    return test::max_abs_diff(duhamel_integral([&](double s) { return std::cos(3 * s) * e2; }, t, steps, sp), exact * e2);
  };
  const double e8 = err(8), e16 = err(16), e32 = err(32);
  CHECK(e8 / e16 >= 3.5);
  CHECK(e16 / e32 >= 3.5);
  CHECK_THROWS_AS(duhamel_integral([&](double) { return e; }, t, 0, sp), InvalidArgument);
}

TEST_CASE("decay reports", "[semigroup][decay]") {
  const Grid g = make_grid(2, 32, 2 * kPi);
  const SemigroupParams sp{1.0};
  const auto ts = default_decay_times(g, sp, 9);
  REQUIRE(ts.front() == Approx(1e-3));
  REQUIRE(ts.back() == Approx(1e-1));
  CHECK(decay_exponent(2, 4, 2, 0) == Approx(0.25));
  CHECK(decay_exponent(2, 6, 2, 1) == Approx(0.5 + 1.0 / 3.0));

  const auto bump = gaussian_bump(g, 0.5 * g.spacing());
  const auto r = verify_decay(bump, 2, 4, 2, ts, sp);
  CHECK(r.ratio_series.size() == ts.size());
  CHECK(r.max_ratio == *std::max_element(r.ratio_series.begin(), r.ratio_series.end()));
  CHECK(r.pass);

  const auto same = verify_decay(bump, 2, 2, 2, ts, sp, 0, 1.1);
  CHECK(same.pass);
  CHECK(same.max_ratio <= 1.1);

  const auto wave = ComplexField::generate(g, [](const auto& x) { return std::exp(Complex(0.0, 3.0 * x[0])); });
  const auto w = verify_decay(wave, 2, 4, 2, ts, sp);
  CHECK(w.pass);
  // |S(t) e^{3ix}| = e^{-9 t} exactly, so the norms follow the exponential envelope.
  for (std::size_t k = 0; k < ts.size(); ++k)
    CHECK(w.norms[k] == Approx(w.norms.front() * std::exp(-9.0 * (ts[k] - ts.front()))).epsilon(1e-10));

  CHECK_THROWS_AS(verify_decay(ComplexField(g), 2, 4, 2, ts, sp), InvalidArgument);
  CHECK_THROWS_AS(verify_decay(bump, 2, 7, 2, ts, sp), InvalidArgument);
  CHECK_THROWS_AS(verify_decay(bump, 2, 4, 2, {0.01, 0.02}, sp), InvalidArgument);
}
