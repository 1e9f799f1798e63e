#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csv.hpp"
#include "field.hpp"
#include "morrey.hpp"
#include "spectral.hpp"
#include "trajectory.hpp"

namespace llglab {

enum class RkScheme { rk2, rk4 };

inline std::string scheme_name(RkScheme s) { return s == RkScheme::rk2 ? "rk2" : "rk4"; }
inline RkScheme parse_scheme(const std::string& s) {
  if (s == "rk2" || s == "projected-rk2") return RkScheme::rk2;
  if (s == "rk4" || s == "projected-rk4") return RkScheme::rk4;
  throw InvalidArgument("unknown scheme '" + s + "' (expected rk2 or rk4)");
}

/// Largest admissible explicit step: c_stab / ((1 + lambda) n k_max^2), k_max = pi / h.
inline double stability_cap(const Grid& g, double lambda, double c_stab = 0.4) {
  const double kmax = std::numbers::pi / g.spacing();
  return c_stab / ((1.0 + lambda) * g.dim() * kmax * kmax);
}

struct LlgConfig {
  double lambda = 1.0;
  double T = 1.0;
  double dt = 0.0;
  RkScheme scheme = RkScheme::rk4;
  int renormalize_every = 1;
  double c_stab = 0.4;
  /// Steps between stored trajectory samples (the final time is always stored).
  int output_every = 1;
  /// Record the M^{2,2} norm of grad m in the ledger (costly on large grids).
  bool record_morrey = true;
};

inline void validate(const LlgConfig& c, const Grid& g) {
  if (!(c.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw InvalidArgument("T must be nonnegative");
  if (!(c.dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double cap = stability_cap(g, c.lambda, c.c_stab);
  if (c.dt > cap * (1 + 1e-12))
    throw InvalidArgument("dt = " + format_number(c.dt) + " exceeds the stability cap " + format_number(cap));
  if (c.renormalize_every < 1) throw InvalidArgument("renormalize_every must be >= 1");
  if (c.output_every < 1) throw InvalidArgument("output_every must be >= 1");
}

/// -v x Lap v - lambda v x (v x Lap v) for an arbitrary vector field.
inline VectorField llg_rhs_raw(const VectorField& v, double lambda) {
  const VectorField lap = laplacian(v);
  VectorField r(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec3 vxl = cross(v[i], lap[i]);
    r[i] = (-1.0) * vxl - lambda * cross(v[i], vxl);
  }
  return r;
}

/// Right-hand side of LLG, projected onto the tangent plane of m.
inline VectorField llg_rhs(const SpinField& m, double lambda) {
  VectorField r = llg_rhs_raw(m.field(), lambda);
  for (std::size_t i = 0; i < m.size(); ++i) r[i] = r[i] - dot(r[i], m[i]) * m[i];
  return r;
}

/// Dirichlet energy (1/2) int |grad m|^2, evaluated as -(1/2) int <m, Lap m> so that
/// the discrete energy law holds with the same Laplacian symbol as the flow (Nyquist included).
inline double dirichlet_energy(const VectorField& m) {
  const VectorField lap = laplacian(m);
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s -= dot(m[i], lap[i]);
  return 0.5 * s * m.grid().cell_volume();
}
inline double dirichlet_energy(const SpinField& m) { return dirichlet_energy(m.field()); }

/// Pointwise |grad m| = (sum_k |d_k m|^2)^{1/2}.
inline ScalarField gradient_magnitude(const SpinField& m) {
  ScalarField s(m.grid());
  for (int k = 0; k < m.grid().dim(); ++k) {
    const auto d = derivative(m.field(), k, 1);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += dot(d[i], d[i]);
  }
  for (auto& v : s.values()) v = std::sqrt(v);
  return s;
}

/// Pointwise |grad^2 m| over all second derivatives.
inline ScalarField hessian_magnitude(const SpinField& m) {
  const Grid& g = m.grid();
  ScalarField s(g);
  for (int j = 0; j < g.dim(); ++j) {
    const auto dj = derivative(m.field(), j, 1);
    for (int k = 0; k < g.dim(); ++k) {
      const auto djk = j == k ? derivative(m.field(), j, 2) : derivative(dj, k, 1);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += dot(djk[i], djk[i]);
    }
  }
  for (auto& v : s.values()) v = std::sqrt(v);
  return s;
}

inline double integral_of_square(const VectorField& v) {
  double s = 0.0;
  for (const auto& x : v.values()) s += dot(x, x);
  return s * v.grid().cell_volume();
}

/// Renormalizes every vector to unit length; NaN or zero vectors signal blow-up.
inline SpinField renormalize(const VectorField& v, double t) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i][0]) || !std::isfinite(v[i][1]) || !std::isfinite(v[i][2]) || norm(v[i]) == 0.0)
      throw BlowupSuspected(t, "non-finite or vanishing spin vector at grid index " + std::to_string(i));
  return SpinField::project(v);
}

namespace detail {

inline VectorField axpy(const VectorField& x, double a, const VectorField& y) {
  VectorField r(x.grid());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + a * y[i];
  return r;
}

} // namespace detail

/// One explicit Runge-Kutta step on the raw vector field (no renormalization).
inline VectorField rk_stage_sequence(const VectorField& v, double dt, double lambda, RkScheme scheme,
                                     const VectorField* k1_in = nullptr) {
  const VectorField k1 = k1_in ? *k1_in : llg_rhs_raw(v, lambda);
  if (scheme == RkScheme::rk2) {
    const VectorField k2 = llg_rhs_raw(detail::axpy(v, dt, k1), lambda);
    VectorField r(v.grid());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] + (0.5 * dt) * (k1[i] + k2[i]);
    return r;
  }
  const VectorField k2 = llg_rhs_raw(detail::axpy(v, 0.5 * dt, k1), lambda);
  const VectorField k3 = llg_rhs_raw(detail::axpy(v, 0.5 * dt, k2), lambda);
  const VectorField k4 = llg_rhs_raw(detail::axpy(v, dt, k3), lambda);
  VectorField r(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return r;
}

/// One scheme step followed by renormalization.
inline SpinField step(const SpinField& m, const LlgConfig& c) {
  return renormalize(rk_stage_sequence(m.field(), c.dt, c.lambda, c.scheme), 0.0);
}

struct EnergyLedger {
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> dissipation;  // int_0^t int |d_t m|^2
  std::vector<double> sup_grad;
  std::vector<double> morrey22;     // ||grad m||_{M^{2,min(2,n)}}, NaN when not recorded

  CsvTable table() const {
    CsvTable t("t,E,dissipation,sup_grad,morrey22");
    for (std::size_t k = 0; k < times.size(); ++k) t.row({times[k], energies[k], dissipation[k], sup_grad[k], morrey22[k]});
    return t;
  }
};

struct LlgResult {
  Trajectory<SpinField> trajectory;
  EnergyLedger ledger;
  int steps = 0;
  double dt = 0.0;
};

/// Integrates LLG from m0 to T with uniform steps of at most config.dt.
inline LlgResult solve_llg(const SpinField& m0, const LlgConfig& c) {
  const Grid& g = m0.grid();
  validate(c, g);
  const int nsteps = c.T == 0.0 ? 0 : static_cast<int>(std::ceil(c.T / c.dt - 1e-9));
  const double dt = nsteps ? c.T / nsteps : 0.0;
  const BallLattice lat = make_lattice(g);
  const double grad_limit = 1e6 / g.spacing();
  const double morrey_q = std::min(2.0, static_cast<double>(g.dim()));

  LlgResult res;
  res.steps = nsteps;
  res.dt = dt;
  res.trajectory.scheme = scheme_name(c.scheme);

  double last_good = 0.0;
  auto record = [&](double t, const SpinField& m, double diss) {
    const ScalarField gm = gradient_magnitude(m);
    const double sg = sup_norm(gm);
    if (!std::isfinite(sg) || sg > grad_limit) throw BlowupSuspected(last_good, "sup |grad m| = " + format_number(sg));
    res.trajectory.push(t, m);
    res.ledger.times.push_back(t);
    res.ledger.energies.push_back(dirichlet_energy(m));
    res.ledger.dissipation.push_back(diss);
    res.ledger.sup_grad.push_back(sg);
    res.ledger.morrey22.push_back(c.record_morrey ? morrey_norm_of_magnitude(gm, 2.0, morrey_q, lat).value
                                                  : std::numeric_limits<double>::quiet_NaN());
  };

  VectorField v = m0.field();
  SpinField m = m0;
  VectorField k1 = llg_rhs_raw(v, c.lambda);
  double power = integral_of_square(llg_rhs(m, c.lambda));
  double diss = 0.0;
  record(0.0, m0, 0.0);
  for (int n = 1; n <= nsteps; ++n) {
    const double t = n * dt;
    v = rk_stage_sequence(v, dt, c.lambda, c.scheme, &k1);
    const bool normalize = n % c.renormalize_every == 0 || n == nsteps || n % c.output_every == 0;
    if (normalize) {
      m = renormalize(v, last_good);
      v = m.field();
    } else {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i][0] + v[i][1] + v[i][2])) throw BlowupSuspected(last_good, "non-finite spin vector");
      m = SpinField::project(v);
    }
    k1 = llg_rhs_raw(v, c.lambda);
    const double p_next = integral_of_square(llg_rhs(m, c.lambda));
    diss += 0.5 * dt * (power + p_next);
    power = p_next;
    if (n % c.output_every == 0 || n == nsteps) record(t, m, diss);
    if (n % 64 == 0 && sup_norm(gradient_magnitude(m)) > grad_limit)
      throw BlowupSuspected(last_good, "sup |grad m| exceeds 1e6/h");
    last_good = t;
  }
  return res;
}

/// max over samples of E(t) + (lambda/(1+lambda^2)) D(t) - E(0) (signed: positive = violation).
inline double energy_inequality_violation(const EnergyLedger& l, double lambda) {
  const double w = lambda / (1.0 + lambda * lambda);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < l.times.size(); ++k) worst = std::max(worst, l.energies[k] + w * l.dissipation[k] - l.energies[0]);
  return l.times.empty() ? 0.0 : worst;
}

/// max over samples of |E(t) + (lambda/(1+lambda^2)) D(t) - E(0)|.
inline double energy_equality_defect(const EnergyLedger& l, double lambda) {
  const double w = lambda / (1.0 + lambda * lambda);
  double worst = 0.0;
  for (std::size_t k = 0; k < l.times.size(); ++k)
    worst = std::max(worst, std::abs(l.energies[k] + w * l.dissipation[k] - l.energies[0]));
  return worst;
}

inline double energy_tolerance(const EnergyLedger& l) { return 1e-4 * l.energies.front() + 1e-10; }

struct EnergyCheck {
  double violation = 0.0;
  double equality_defect = 0.0;
  double tolerance = 0.0;
  bool monotone = true;
  bool pass = false;
};

inline EnergyCheck check_energy_inequality(const EnergyLedger& l, double lambda) {
  EnergyCheck c;
  if (l.times.empty()) {
    c.pass = true;
    return c;
  }
  c.violation = energy_inequality_violation(l, lambda);
  c.equality_defect = energy_equality_defect(l, lambda);
  c.tolerance = energy_tolerance(l);
  for (std::size_t k = 1; k < l.energies.size(); ++k)
    if (l.energies[k] > l.energies[k - 1] + c.tolerance) c.monotone = false;
  c.pass = c.violation <= c.tolerance;
  return c;
}

/// Sup-norm residual of lambda d_t m + m x d_t m - (1 + lambda^2)(Lap m + |grad m|^2 m).
inline double check_equivalent_form(const SpinField& m, const VectorField& dt_m, double lambda) {
  const Grid& g = m.grid();
  VectorField tau = laplacian(m.field());
  ScalarField grad2(g);
  for (int k = 0; k < g.dim(); ++k) {
    const auto d = derivative(m.field(), k, 1);
    for (std::size_t i = 0; i < g.size(); ++i) grad2[i] += dot(d[i], d[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 t = tau[i] + grad2[i] * m[i];
    const Vec3 lhs = lambda * dt_m[i] + cross(m[i], dt_m[i]);
    worst = std::max(worst, norm(lhs - (1.0 + lambda * lambda) * t));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Local energy inequality on a parabolic cylinder.

/// Smooth radial cutoff: 1 on B_{r/2}(c), 0 outside B_r(c), with its exact gradient.
struct Cutoff {
  ScalarField phi;
  std::vector<ScalarField> grad;
};

inline Cutoff smooth_cutoff(const Grid& g, std::size_t center, double r) {
  auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  auto fp = [&](double t) { return t > 0.0 ? f(t) / (t * t) : 0.0; };
  Cutoff c{ScalarField(g), std::vector<ScalarField>(static_cast<std::size_t>(g.dim()), ScalarField(g))};
  const auto cc = g.coords(center);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto xi = g.coords(i);
    double off[3] = {0, 0, 0};
    double d2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      const auto k = static_cast<std::size_t>(d);
      off[d] = g.wrapped_offset(cc[k], xi[k]) * g.spacing();
      d2 += off[d] * off[d];
    }
    const double s = std::sqrt(d2) / r;
    if (s <= 0.5) {
      c.phi[i] = 1.0;
    } else if (s < 1.0) {
      const double tau = 2.0 * s - 1.0;
      const double a = f(1.0 - tau), b = f(tau);
      c.phi[i] = a / (a + b);
      const double dpsi = 2.0 * (-fp(1.0 - tau) * b - a * fp(tau)) / ((a + b) * (a + b));
      for (int d = 0; d < g.dim(); ++d) c.grad[static_cast<std::size_t>(d)][i] = dpsi * off[d] / (std::sqrt(d2) * r);
    }
  }
  return c;
}

struct LocalEnergyRecord {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs, nonnegative when the inequality holds
  double constant = 0.0;
  /// int_{P_{r/2}} |d_t m|^2 divided by r^{-2} int_{P_r} |grad m|^2.
  double half_cylinder_ratio = 0.0;
  bool pass = false;
};

/// C(lambda) = 4 (1 + lambda^2)^2 / lambda in
/// lambda int int |d_t m|^2 phi^2 + (1+lambda^2) int |grad m(t2)|^2 phi^2
///   <= (1+lambda^2) int |grad m(t1)|^2 phi^2 + C(lambda) int int |grad m|^2 |grad phi|^2.
inline double local_energy_constant(double lambda) {
  return 4.0 * (1.0 + lambda * lambda) * (1.0 + lambda * lambda) / lambda;
}

inline LocalEnergyRecord check_local_energy(const Trajectory<SpinField>& traj, const CylinderSpec& cyl, double lambda,
                                            const Cutoff& cutoff) {
  if (traj.empty()) throw CoverageError("empty trajectory");
  const Grid& g = traj.states.front().grid();
  check_cylinder_coverage(traj.times, g, cyl);
  const double r = cyl.radius_cells * g.spacing();
  const double t1 = cyl.t0 - r * r, t2 = cyl.t0;
  const auto cc = g.coords(cyl.center);

  std::vector<char> in_half(g.size(), 0), in_full(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto xi = g.coords(i);
    double d2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      const double o = g.wrapped_offset(cc[static_cast<std::size_t>(d)], xi[static_cast<std::size_t>(d)]) * g.spacing();
      d2 += o * o;
    }
    in_full[i] = d2 <= r * r * (1 + 1e-12);
    in_half[i] = d2 <= 0.25 * r * r * (1 + 1e-12);
  }

  const std::size_t n = traj.size();
  std::vector<double> dt_phi(n), grad_phi(n), grad_gradphi(n), dt_half(n), grad_full(n);
  for (std::size_t k = 0; k < n; ++k) {
    const SpinField& m = traj.states[k];
    const VectorField dm = llg_rhs(m, lambda);
    const ScalarField gm = gradient_magnitude(m);
    double a = 0, b = 0, c = 0, d = 0, e = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double phi2 = cutoff.phi[i] * cutoff.phi[i];
      double gphi2 = 0.0;
      for (const auto& gp : cutoff.grad) gphi2 += gp[i] * gp[i];
      const double dm2 = dot(dm[i], dm[i]);
      const double g2 = gm[i] * gm[i];
      a += dm2 * phi2;
      b += g2 * phi2;
      c += g2 * gphi2;
      if (in_half[i]) d += dm2;
      if (in_full[i]) e += g2;
    }
    const double hv = g.cell_volume();
    dt_phi[k] = a * hv;
    grad_phi[k] = b * hv;
    grad_gradphi[k] = c * hv;
    dt_half[k] = d * hv;
    grad_full[k] = e * hv;
  }
  auto value_at = [&](const std::vector<double>& v, double t) {
    auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    if (it == traj.times.begin()) return v.front();
    if (it == traj.times.end()) return v.back();
    const auto i = static_cast<std::size_t>(it - traj.times.begin());
    const double w = (t - traj.times[i - 1]) / (traj.times[i] - traj.times[i - 1]);
    return (1 - w) * v[i - 1] + w * v[i];
  };
  const double l2 = 1.0 + lambda * lambda;
  LocalEnergyRecord rec;
  rec.constant = local_energy_constant(lambda);
  rec.lhs = lambda * detail::integrate_interpolant(traj.times, dt_phi, t1, t2) + l2 * value_at(grad_phi, t2);
  rec.rhs = l2 * value_at(grad_phi, t1) + rec.constant * detail::integrate_interpolant(traj.times, grad_gradphi, t1, t2);
  rec.margin = rec.rhs - rec.lhs;
  rec.pass = rec.margin >= -1e-10 * std::max(1.0, rec.rhs);
  const double top = detail::integrate_interpolant(traj.times, dt_half, t2 - 0.25 * r * r, t2);
  const double bottom = detail::integrate_interpolant(traj.times, grad_full, t1, t2) / (r * r);
  rec.half_cylinder_ratio = bottom > 0.0 ? top / bottom : 0.0;
  return rec;
}

// ---------------------------------------------------------------------------
// Compensated sup-norm decay monitor.

struct GradientDecay {
  std::vector<double> times;
  std::vector<double> first;   // t^{1/2} ||grad m||_inf
  std::vector<double> second;  // t ||grad^2 m||_inf
};

inline GradientDecay gradient_decay_series(const Trajectory<SpinField>& traj) {
  GradientDecay d;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    d.times.push_back(t);
    d.first.push_back(std::sqrt(t) * sup_norm(gradient_magnitude(traj.states[k])));
    d.second.push_back(t * sup_norm(hessian_magnitude(traj.states[k])));
  }
  return d;
}

} // namespace llglab
