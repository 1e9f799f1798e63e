#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "morrey.hpp"
#include "spectral.hpp"

namespace llglab {

/// Damping of the dissipative Schroedinger semigroup S(t) = exp(t (lambda - i) Laplacian).
struct SemigroupParams {
  double lambda = 1.0;
};

inline void check_semigroup_args(const SemigroupParams& params, double t) {
  if (!(params.lambda > 0.0)) throw InvalidArgument("damping lambda must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("semigroup time must be nonnegative");
}

/// Multiplies each coefficient by exp((i - lambda)|xi|^2 t).
inline Spectrum& propagate(Spectrum& s, double t, const SemigroupParams& params) {
  check_semigroup_args(params, t);
  if (t == 0.0) return s;
  const Grid& g = s.grid();
  const Complex rate{-params.lambda, 1.0};
  s.apply([&](const Index3& j) { return std::exp(rate * (wavenumber_squared(g, j) * t)); });
  return s;
}

inline ComplexField apply_semigroup(const ComplexField& f, double t, const SemigroupParams& params) {
  check_semigroup_args(params, t);
  if (t == 0.0) return f;
  Spectrum s = forward(f);
  return inverse(propagate(s, t, params));
}

inline std::vector<ComplexField> apply_grad_semigroup(const ComplexField& f, double t, const SemigroupParams& params) {
  return gradient(apply_semigroup(f, t, params));
}

/// Composite exponential midpoint rule for int_0^t S(t - s) F(s) ds.
inline ComplexField duhamel_integral(const std::function<ComplexField(double)>& forcing, double t, int steps,
                                     const SemigroupParams& params) {
  check_semigroup_args(params, t);
  if (steps < 1) throw InvalidArgument("Duhamel quadrature needs at least one step");
  const double dt = t / steps;
  Spectrum acc(forcing(0.5 * dt).grid());
  for (int k = 0; k < steps; ++k) {
    const double s = (k + 0.5) * dt;
    Spectrum piece = forward(forcing(s));
    propagate(piece, t - s, params);
    acc += piece;
  }
  acc *= Complex(dt, 0.0);
  return inverse(std::move(acc));
}

// ---------------------------------------------------------------------------
// One-sided numerical checks of the decay estimates.

struct DecayReport {
  double p = 0.0;
  double p_tilde = 0.0;
  double q = 0.0;
  int order = 0;
  std::vector<double> t_samples;
  std::vector<double> norms;
  std::vector<double> ratio_series;
  double max_ratio = 0.0;
  double c_max = 50.0;
  /// Max over the last decade of t is at most twice the max over the first.
  bool no_upward_trend = false;
  /// Ratios never increase across the last decade of t.
  bool final_decade_nonincreasing = false;
  bool pass = false;
};

/// Power of t that compensates the claimed decay: (q/2)(1/p - 1/p~), plus 1/2 for the gradient.
inline double decay_exponent(double p, double p_tilde, double q, int order) {
  return 0.5 * q * (1.0 / p - 1.0 / p_tilde) + 0.5 * order;
}

/// Log-spaced times over two decades ending at 0.1 L^2 / (4 pi^2 lambda).
inline std::vector<double> default_decay_times(const Grid& g, const SemigroupParams& params, int count = 21) {
  const double tmax = 0.1 * g.box_length() * g.box_length() / (4.0 * std::numbers::pi * std::numbers::pi * params.lambda);
  std::vector<double> ts;
  for (int k = 0; k < count; ++k) ts.push_back(tmax * std::pow(10.0, -2.0 + 2.0 * k / (count - 1)));
  return ts;
}

/// Ratio series ||grad^order S(t) f||_{M^{p~,q}} t^{exponent} / ||f||_{M^{p,q}}.
inline DecayReport verify_decay(const ComplexField& f, double p, double p_tilde, double q, const std::vector<double>& t_list,
                                const SemigroupParams& params, int order = 0, double c_max = 50.0,
                                const BallLattice* lattice = nullptr) {
  const Grid& g = f.grid();
  if (!(p <= p_tilde) || p_tilde > p * (g.dim() + 1) * (1 + 1e-12))
    throw InvalidArgument("decay check needs p <= p~ <= p(n+1)");
  if (order != 0 && order != 1) throw InvalidArgument("decay order must be 0 or 1");
  if (t_list.size() < 2) throw InvalidArgument("decay check needs at least two times");
  for (std::size_t k = 0; k < t_list.size(); ++k)
    if (!(t_list[k] > 0.0) || (k > 0 && !(t_list[k] > t_list[k - 1])))
      throw InvalidArgument("decay times must be positive and increasing");
  if (t_list.back() < 100.0 * t_list.front() * (1 - 1e-9)) throw InvalidArgument("decay times must span two decades");
  const BallLattice lat = lattice ? *lattice : make_lattice(g);
  const double f_norm = morrey_norm(f, p, q, lat).value;
  if (!(f_norm > 0.0)) throw InvalidArgument("decay ratio undefined for a zero field");

  DecayReport rep;
  rep.p = p;
  rep.p_tilde = p_tilde;
  rep.q = q;
  rep.order = order;
  rep.c_max = c_max;
  rep.t_samples = t_list;
  const double e = decay_exponent(p, p_tilde, q, order);
  for (double t : t_list) {
    const ComplexField st = apply_semigroup(f, t, params);
    const double nrm = order == 0 ? morrey_norm(st, p_tilde, q, lat).value : morrey_norm(gradient(st), p_tilde, q, lat).value;
    rep.norms.push_back(nrm);
    rep.ratio_series.push_back(nrm * std::pow(t, e) / f_norm);
  }
  rep.max_ratio = *std::max_element(rep.ratio_series.begin(), rep.ratio_series.end());
  const double t0 = t_list.front(), t1 = t_list.back();
  double first = 0.0, last = 0.0;
  rep.final_decade_nonincreasing = true;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    const double t = t_list[k];
    if (t <= 10.0 * t0 * (1 + 1e-12)) first = std::max(first, rep.ratio_series[k]);
    if (t >= 0.1 * t1 * (1 - 1e-12)) {
      last = std::max(last, rep.ratio_series[k]);
      if (k > 0 && t_list[k - 1] >= 0.1 * t1 * (1 - 1e-12) &&
          rep.ratio_series[k] > rep.ratio_series[k - 1] * (1 + 1e-12))
        rep.final_decade_nonincreasing = false;
    }
  }
  rep.no_upward_trend = last <= 2.0 * first;
  rep.pass = rep.max_ratio <= c_max && rep.no_upward_trend;
  return rep;
}

/// Gaussian bump exp(-|x - c|^2 / (2 width^2)) centred in the box.
inline ComplexField gaussian_bump(const Grid& g, double width) {
  const double c = 0.5 * g.box_length();
  return ComplexField::generate(g, [&](const auto& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) r2 += (x[static_cast<std::size_t>(d)] - c) * (x[static_cast<std::size_t>(d)] - c);
    return Complex(std::exp(-r2 / (2.0 * width * width)), 0.0);
  });
}

/// Widths of the standard decay-check bumps: h/2, 3h/4 and h.
inline std::vector<double> standard_bump_widths(const Grid& g) {
  const double h = g.spacing();
  return {0.5 * h, 0.75 * h, h};
}

} // namespace llglab
