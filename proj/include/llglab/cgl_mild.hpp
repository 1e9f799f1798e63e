#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "csv.hpp"
#include "frame_gauge.hpp"
#include "morrey.hpp"
#include "semigroup.hpp"
#include "trajectory.hpp"

namespace llglab {

// ---------------------------------------------------------------------------
// Exponent windows of the fixed-point estimates.

struct BetaPair {
  std::string label;  // nonlinearity family / target norm, e.g. "cubic/R2"
  double d1 = 0.0;
  double d2 = 0.0;
  bool valid = false;
  /// B[d1, d2] = int_0^1 (1 - s)^{-d1} s^{-d2} ds by quadrature; NaN when invalid.
  double beta = std::numeric_limits<double>::quiet_NaN();
};

struct WindowReport {
  double p = 0.0;
  std::vector<BetaPair> pairs;
  bool valid = false;
  /// Label of the first failing pair, empty when valid.
  std::string first_failure;
};

namespace detail {

/// int_0^c s^{b-1} g(s) ds for smooth g, via s = u^{1/b} and composite Simpson.
template <class Fn>
double singular_endpoint_integral(double b, double c, Fn&& g, int intervals = 4000) {
  const double top = std::pow(c, b);
  const double h = top / intervals;
  double acc = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double u = i * h;
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * g(std::pow(u, 1.0 / b));
  }
  return acc * h / (3.0 * b);
}

} // namespace detail

/// int_0^1 (1 - s)^{-d1} s^{-d2} ds for d1, d2 < 1, split at 1/2 and desingularized.
inline double beta_quadrature(double d1, double d2) {
  if (!(d1 < 1.0) || !(d2 < 1.0)) throw InvalidArgument("Beta integral diverges unless both exponents are < 1");
  const double a = 1.0 - d1, b = 1.0 - d2;
  const double left = detail::singular_endpoint_integral(b, 0.5, [&](double s) { return std::pow(1.0 - s, a - 1.0); });
  const double right = detail::singular_endpoint_integral(a, 0.5, [&](double s) { return std::pow(1.0 - s, b - 1.0); });
  return left + right;
}

/// Evaluates the nine (d1, d2) pairs of the cubic, derivative and quintic estimates.
inline WindowReport exponent_window_check(double p) {
  if (!(p > 2.0)) throw InvalidArgument("exponent window check needs p > 2");
  const double c = 1.5 * (1.0 - 2.0 / p), d = 1.5 - 2.0 / p, e = 2.5 - 5.0 / p;
  WindowReport rep;
  rep.p = p;
  rep.pairs = {
      {"cubic/R1", 2.0 / p, c},           {"cubic/R2", 3.0 / p, c},           {"cubic/R3", 3.0 / p - 0.5, c},
      {"derivative/R1", 1.0 / p, d},      {"derivative/R2", 2.0 / p, d},      {"derivative/R3", 2.0 / p - 0.5, d},
      {"quintic/R1", (4.0 - p) / p, e},   {"quintic/R2", (5.0 - p) / p, e},   {"quintic/R3", 5.0 / p - 1.5, e},
  };
  rep.valid = true;
  for (auto& pr : rep.pairs) {
    pr.valid = pr.d1 < 1.0 && pr.d2 < 1.0;
    if (pr.valid) {
      pr.beta = beta_quadrature(pr.d1, pr.d2);
    } else if (rep.valid) {
      rep.valid = false;
      rep.first_failure = pr.label;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Nonlinearity of the covariant Ginzburg-Landau system.

struct Nonlinearity {
  ComplexTuple cubic;       // (lambda - i) i sum_k Im(u conj u_k) u_k
  ComplexTuple derivative;  // (lambda - i) 2i (a . grad) u - i a0_1 u
  ComplexTuple quintic;     // -(lambda - i)|a|^2 u - i a0_2 u
  ComplexTuple total;
};

inline Nonlinearity nonlinearity_parts(const ComplexTuple& u, const std::vector<ScalarField>& a, const ScalarField& a0_1,
                                       const ScalarField& a0_2, double lambda) {
  if (u.empty()) throw InvalidArgument("empty u");
  const Grid& g = u.front().grid();
  for (const auto& c : u) require_same_grid(c.grid(), g);
  for (const auto& c : a) require_same_grid(c.grid(), g);
  require_same_grid(a0_1.grid(), g);
  require_same_grid(a0_2.grid(), g);
  if (a.size() != static_cast<std::size_t>(g.dim())) throw InvalidArgument("connection needs one component per axis");
  const std::size_t n = u.size();
  const Complex li{lambda, -1.0};

  Nonlinearity out{zero_tuple(g, static_cast<int>(n)), zero_tuple(g, static_cast<int>(n)),
                   zero_tuple(g, static_cast<int>(n)), zero_tuple(g, static_cast<int>(n))};
  ScalarField a2(g);
  for (const auto& ak : a)
    for (std::size_t i = 0; i < g.size(); ++i) a2[i] += ak[i] * ak[i];

  for (std::size_t l = 0; l < n; ++l) {
    const auto grad = gradient(u[l]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      Complex s{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) s += std::imag(u[l][i] * std::conj(u[k][i])) * u[k][i];
      Complex adv{0.0, 0.0};
      for (std::size_t k = 0; k < a.size(); ++k) adv += a[k][i] * grad[k][i];
      out.cubic[l][i] = li * kI * s;
      out.derivative[l][i] = li * 2.0 * kI * adv - kI * a0_1[i] * u[l][i];
      out.quintic[l][i] = -li * a2[i] * u[l][i] - kI * a0_2[i] * u[l][i];
      out.total[l][i] = out.cubic[l][i] + out.derivative[l][i] + out.quintic[l][i];
    }
  }
  return out;
}

inline ComplexTuple nonlinearity_F(const ComplexTuple& u, const std::vector<ScalarField>& a, const ScalarField& a0_1,
                                   const ScalarField& a0_2, double lambda) {
  return nonlinearity_parts(u, a, a0_1, a0_2, lambda).total;
}

/// F with the gauge fields recovered from u itself.
inline ComplexTuple nonlinearity_of(const ComplexTuple& u, double lambda) {
  const auto gf = gauge_fields_from_u(u, lambda);
  return nonlinearity_F(u, gf.a, gf.a0_1, gf.a0_2, lambda);
}

// ---------------------------------------------------------------------------
// Picard iteration of the mild formulation.

struct CglConfig {
  double lambda = 1.0;
  double p = 3.2;
  double T = 0.5;
  /// Output intervals of [0, T].
  int time_steps = 16;
  double picard_tol = 1e-8;
  int picard_max_iter = 40;
  /// Duhamel quadrature steps per output interval.
  int duhamel_substeps = 4;
  /// Smallness threshold on ||v0||_{M^{2,2}}; above it a warning is logged.
  double epsilon0 = 0.05;
  /// Compute the solution-space norms of every iterate (for the iteration log).
  bool log_xpt = true;
};

inline void validate(const CglConfig& c) {
  if (!(c.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(c.p > 3.0 && c.p < 10.0 / 3.0)) throw InvalidArgument("p must lie strictly inside (3, 10/3)");
  if (!exponent_window_check(c.p).valid) throw InvalidArgument("p fails the exponent window check");
  if (!(c.T > 0.0) || !std::isfinite(c.T)) throw InvalidArgument("T must be positive");
  if (c.time_steps < 1) throw InvalidArgument("time_steps must be >= 1");
  if (c.duhamel_substeps < 1) throw InvalidArgument("duhamel_substeps must be >= 1");
  if (!(c.picard_tol > 0.0)) throw InvalidArgument("picard_tol must be positive");
  if (c.picard_max_iter < 1) throw InvalidArgument("picard_max_iter must be >= 1");
  if (!(c.epsilon0 > 0.0)) throw InvalidArgument("epsilon0 must be positive");
}

struct PicardLogEntry {
  int iteration = 0;
  double increment = 0.0;
  XptReport xpt;
};

struct CglResult {
  Trajectory<ComplexTuple> trajectory;  // at the output times
  std::vector<ComplexTuple> nodes;      // every half quadrature step
  XptReport xpt;
  std::vector<PicardLogEntry> log;
  int iterations = 0;
  bool converged = false;
  double v0_norm = 0.0;
  std::vector<std::string> warnings;
  /// max |div a| over output times of the final iterate.
  double div_a_residual = 0.0;

  std::vector<double> increments() const {
    std::vector<double> v;
    for (const auto& e : log) v.push_back(e.increment);
    return v;
  }
  CsvTable log_table() const {
    CsvTable t("iter,increment,xpt_R1,xpt_R2,xpt_R3");
    for (const auto& e : log) t.row({static_cast<double>(e.iteration), e.increment, e.xpt.R1, e.xpt.R2, e.xpt.R3});
    return t;
  }
};

/// ||f||_{M^{2,q}} with q = min(2, n) for a tuple.
inline double morrey22(const ComplexTuple& f, const BallLattice& lat) {
  return morrey_norm(f, 2.0, std::min(2.0, static_cast<double>(lat.grid.dim())), lat).value;
}

inline double l2_norm(const ComplexTuple& f) {
  double s = 0.0;
  for (const auto& c : f) s += std::pow(l2_norm(c), 2);
  return std::sqrt(s);
}

inline ComplexTuple apply_semigroup(const ComplexTuple& f, double t, const SemigroupParams& sp) {
  ComplexTuple out;
  for (const auto& c : f) out.push_back(apply_semigroup(c, t, sp));
  return out;
}

namespace detail {

/// Node states at multiples of half a quadrature step, t_k = k * step / 2.
using NodeStates = std::vector<ComplexTuple>;

struct MildGrid {
  int steps = 0;        // quadrature steps over [0, T]
  double step = 0.0;
  int per_output = 0;   // quadrature steps per output interval
};

inline MildGrid mild_grid(const CglConfig& c) {
  MildGrid m;
  m.per_output = c.duhamel_substeps;
  m.steps = c.time_steps * c.duhamel_substeps;
  m.step = c.T / m.steps;
  return m;
}

/// S(t_k) v0 at every node.
inline NodeStates free_evolution(const ComplexTuple& v0, const MildGrid& mg, const SemigroupParams& sp) {
  NodeStates out;
  for (int k = 0; k <= 2 * mg.steps; ++k) out.push_back(apply_semigroup(v0, 0.5 * k * mg.step, sp));
  return out;
}

inline Spectrum propagated(const ComplexField& f, double t, const SemigroupParams& sp) {
  Spectrum s = forward(f);
  return propagate(s, t, sp);
}

/// One application of the mild map: S(t) v0 + Duhamel(F(prev)) at every node.
///
/// Full step:  I(t + D)   = S(D) I(t)   + D   S(D/2) F(t + D/2)
/// Half step:  I(t + D/2) = S(D/2) I(t) + D/2 S(D/4) (F(t) + F(t + D/2)) / 2
inline NodeStates mild_map(const NodeStates& free, const NodeStates& prev, const MildGrid& mg, double lambda) {
  const SemigroupParams sp{lambda};
  const std::size_t nodes = prev.size();
  const std::size_t ncomp = prev.front().size();
  const Grid& g = prev.front().front().grid();
  std::vector<ComplexTuple> F;
  F.reserve(nodes);
  for (const auto& u : prev) F.push_back(nonlinearity_of(u, lambda));

  NodeStates out(nodes);
  out[0] = free[0];
  std::vector<Spectrum> acc(ncomp, Spectrum(g));
  const double D = mg.step;
  for (int i = 0; i < mg.steps; ++i) {
    const std::size_t k0 = 2 * static_cast<std::size_t>(i), k1 = k0 + 1, k2 = k0 + 2;
    ComplexTuple half(ncomp, ComplexField(g)), full(ncomp, ComplexField(g));
    for (std::size_t c = 0; c < ncomp; ++c) {
      Spectrum h = acc[c];
      propagate(h, 0.5 * D, sp);
      ComplexField avg = 0.5 * (F[k0][c] + F[k1][c]);
      Spectrum hf = propagated(avg, 0.25 * D, sp);
      hf *= Complex(0.5 * D, 0.0);
      h += hf;

      propagate(acc[c], D, sp);
      Spectrum mid = propagated(F[k1][c], 0.5 * D, sp);
      mid *= Complex(D, 0.0);
      acc[c] += mid;

      half[c] = free[k1][c] + inverse(std::move(h));
      full[c] = free[k2][c] + inverse(acc[c]);
    }
    out[k1] = std::move(half);
    out[k2] = std::move(full);
  }
  return out;
}

inline double sup_l2_difference(const NodeStates& a, const NodeStates& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < a[k].size(); ++c) s += std::pow(l2_norm(a[k][c] - b[k][c]), 2);
    if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

inline double sup_l2(const NodeStates& a) {
  double worst = 0.0;
  for (const auto& u : a) worst = std::max(worst, l2_norm(u));
  return worst;
}

inline Trajectory<ComplexTuple> output_trajectory(const NodeStates& nodes, const MildGrid& mg, const CglConfig& c) {
  Trajectory<ComplexTuple> tr;
  tr.scheme = "picard/exp-midpoint";
  for (int j = 0; j <= c.time_steps; ++j)
    tr.push(c.T * j / c.time_steps, nodes[2 * static_cast<std::size_t>(j * mg.per_output)]);
  return tr;
}

inline double max_div_residual(const Trajectory<ComplexTuple>& tr, double lambda) {
  double worst = 0.0;
  for (const auto& u : tr.states) {
    const auto gf = gauge_fields_from_u(u, lambda);
    worst = std::max(worst, sup_norm(divergence(gf.a)));
  }
  return worst;
}

} // namespace detail

/// Picard iteration u^{j+1} = S(t) v0 + int_0^t S(t - s) F(u^j)(s) ds.
inline CglResult picard_iterate(const ComplexTuple& v0, const CglConfig& c) {
  validate(c);
  if (v0.empty()) throw InvalidArgument("empty initial data");
  const Grid& g = v0.front().grid();
  if (v0.size() != static_cast<std::size_t>(g.dim())) throw InvalidArgument("initial data needs one component per axis");
  const BallLattice lat = make_lattice(g);
  const SemigroupParams sp{c.lambda};
  const auto mg = detail::mild_grid(c);

  CglResult res;
  res.v0_norm = morrey22(v0, lat);
  if (res.v0_norm > c.epsilon0)
    res.warnings.push_back("||v0||_{M^{2,2}} = " + format_number(res.v0_norm) + " exceeds epsilon0 = " +
                           format_number(c.epsilon0) + "; contraction not guaranteed");

  const auto free = detail::free_evolution(v0, mg, sp);
  detail::NodeStates cur = free;
  const double scale = std::max(detail::sup_l2(free), std::numeric_limits<double>::min());
  // Increments below this level are round-off, not iteration error.
  const double floor = 1e-13 * scale;
  int growth = 0;
  double prev_inc = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= c.picard_max_iter; ++it) {
    detail::NodeStates next = detail::mild_map(free, cur, mg, c.lambda);
    const double inc = detail::sup_l2_difference(next, cur);
    if (!std::isfinite(inc)) throw NonContraction(it, inc);
    PicardLogEntry e;
    e.iteration = it;
    e.increment = inc;
    cur = std::move(next);
    if (c.log_xpt) e.xpt = xpt_norm(detail::output_trajectory(cur, mg, c), c.p, lat);
    res.log.push_back(e);
    res.iterations = it;
    if (inc < c.picard_tol || inc <= floor) {
      res.converged = true;
      break;
    }
    growth = inc > prev_inc ? growth + 1 : 0;
    if (growth >= 3) throw NonContraction(it, inc);
    prev_inc = inc;
  }
  if (!res.converged)
    res.warnings.push_back("Picard iteration stopped at max_iter without reaching picard_tol");
  res.trajectory = detail::output_trajectory(cur, mg, c);
  res.nodes = std::move(cur);
  res.xpt = c.log_xpt && !res.log.empty() ? res.log.back().xpt : xpt_norm(res.trajectory, c.p, lat);
  res.div_a_residual = detail::max_div_residual(res.trajectory, c.lambda);
  return res;
}

/// sup over nodes of ||u - Phi(u)||_{L^2} for the returned iterate.
inline double fixed_point_residual(const ComplexTuple& v0, const CglConfig& c, const CglResult& r) {
  validate(c);
  const auto mg = detail::mild_grid(c);
  if (r.nodes.size() != 2 * static_cast<std::size_t>(mg.steps) + 1) throw InvalidArgument("result does not match config");
  const auto free = detail::free_evolution(v0, mg, SemigroupParams{c.lambda});
  return detail::sup_l2_difference(detail::mild_map(free, r.nodes, mg, c.lambda), r.nodes);
}

// ---------------------------------------------------------------------------
// Stability of the solution map.

inline Trajectory<ComplexTuple> difference(const Trajectory<ComplexTuple>& a, const Trajectory<ComplexTuple>& b) {
  if (a.times != b.times) throw InvalidArgument("trajectories sampled at different times");
  Trajectory<ComplexTuple> d;
  d.scheme = a.scheme;
  for (std::size_t k = 0; k < a.size(); ++k) d.push(a.times[k], a.states[k] - b.states[k]);
  return d;
}

struct StabilityRecord {
  std::vector<double> deltas;
  std::vector<double> ratios;  // ||u_a - u_b||_{X^p_T} / ||v0_a - v0_b||_{M^{2,2}}
  bool zero_difference = false;
  double spread = 0.0;         // (max - min) / min over the series
};

/// Solves from v0_a and from v0_a + delta * direction for delta = delta0, delta0/2, ...
inline StabilityRecord stability_experiment(const ComplexTuple& v0_a, const ComplexTuple& direction, double delta0,
                                            int halvings, CglConfig c) {
  c.log_xpt = false;
  const Grid& g = v0_a.front().grid();
  const BallLattice lat = make_lattice(g);
  const auto ua = picard_iterate(v0_a, c);
  StabilityRecord rec;
  const double dir_norm = morrey22(direction, lat);
  if (dir_norm == 0.0 || delta0 == 0.0) {
    rec.zero_difference = true;
    return rec;
  }
  double delta = delta0;
  for (int k = 0; k <= halvings; ++k, delta *= 0.5) {
    const auto v0_b = v0_a + scaled(delta, direction);
    const auto ub = picard_iterate(v0_b, c);
    const double num = xpt_norm(difference(ua.trajectory, ub.trajectory), c.p, lat).total;
    const double den = morrey22(v0_a - v0_b, lat);
    rec.deltas.push_back(delta);
    rec.ratios.push_back(den > 0.0 ? num / den : 0.0);
  }
  const auto [lo, hi] = std::minmax_element(rec.ratios.begin(), rec.ratios.end());
  rec.spread = *lo > 0.0 ? (*hi - *lo) / *lo : std::numeric_limits<double>::infinity();
  return rec;
}

/// Ratio for a single pair of data; an exact zero difference is flagged rather than divided.
inline StabilityRecord stability_pair(const ComplexTuple& v0_a, const ComplexTuple& v0_b, CglConfig c) {
  c.log_xpt = false;
  const BallLattice lat = make_lattice(v0_a.front().grid());
  StabilityRecord rec;
  const double den = morrey22(v0_a - v0_b, lat);
  if (den == 0.0) {
    rec.zero_difference = true;
    return rec;
  }
  const auto ua = picard_iterate(v0_a, c);
  const auto ub = picard_iterate(v0_b, c);
  rec.ratios.push_back(xpt_norm(difference(ua.trajectory, ub.trajectory), c.p, lat).total / den);
  return rec;
}

} // namespace llglab
