#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cgl_mild.hpp"
#include "csv.hpp"
#include "frame_gauge.hpp"
#include "initial_data.hpp"
#include "llg_direct.hpp"
#include "morrey.hpp"
#include "semigroup.hpp"

namespace llglab {

inline double relative_l2(const ScalarField& reference, const ScalarField& other) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    num += (reference[i] - other[i]) * (reference[i] - other[i]);
    den += reference[i] * reference[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// ||grad m||_{M^{2,min(2,n)}}.
inline double gradient_morrey22(const SpinField& m, const BallLattice& lat) {
  return morrey_norm_of_magnitude(gradient_magnitude(m), 2.0, std::min(2.0, static_cast<double>(m.grid().dim())), lat).value;
}

/// Coulomb-gauge spatial components of u for a spin field (the mild solver's initial data).
inline ComplexTuple coulomb_u(const SpinField& m, double lambda) {
  const auto fr = build_frame(m);
  return coulomb_gauge_fix(derive_gauge(m, llg_rhs(m, lambda), fr)).u;
}

// ---------------------------------------------------------------------------
// Direct versus mild solver.

struct CrossValidationConfig {
  double lambda = 1.0;
  double T = 0.5;
  int time_steps = 16;
  /// Direct step as a fraction of the stability cap.
  double llg_dt_fraction = 0.25;
  RkScheme scheme = RkScheme::rk4;
  int duhamel_substeps = 4;
  double picard_tol = 1e-14;
  int picard_max_iter = 40;
  double p = 3.2;

  CrossValidationConfig refined() const {
    auto c = *this;
    c.llg_dt_fraction *= 0.5;
    c.duhamel_substeps *= 2;
    return c;
  }
};

struct CrossValidationReport {
  std::vector<double> times;
  std::vector<double> discrepancy;  // relative L^2 of |grad m| fields
  double sup_discrepancy = 0.0;
  int picard_iterations = 0;
  int llg_steps = 0;
  double llg_dt = 0.0;
  std::vector<std::string> warnings;

  CsvTable table() const {
    CsvTable t("t,relative_l2_discrepancy");
    for (std::size_t k = 0; k < times.size(); ++k) t.row({times[k], discrepancy[k]});
    return t;
  }
};

/// Compares |grad m| from the direct solver with (sum_k |u_k|^2)^{1/2} from the mild solver.
inline CrossValidationReport cross_validate(const SpinField& m0, const CrossValidationConfig& cv) {
  const Grid& g = m0.grid();
  const double cap = stability_cap(g, cv.lambda);
  const double interval = cv.T / cv.time_steps;
  const int per_output = std::max(1, static_cast<int>(std::ceil(interval / (cv.llg_dt_fraction * cap) - 1e-9)));

  LlgConfig lc;
  lc.lambda = cv.lambda;
  lc.T = cv.T;
  lc.dt = interval / per_output;
  lc.scheme = cv.scheme;
  lc.output_every = per_output;
  lc.record_morrey = false;
  const auto direct = solve_llg(m0, lc);

  CglConfig cc;
  cc.lambda = cv.lambda;
  cc.p = cv.p;
  cc.T = cv.T;
  cc.time_steps = cv.time_steps;
  cc.duhamel_substeps = cv.duhamel_substeps;
  cc.picard_tol = cv.picard_tol;
  cc.picard_max_iter = cv.picard_max_iter;
  cc.log_xpt = false;
  const auto mild = picard_iterate(coulomb_u(m0, cv.lambda), cc);

  CrossValidationReport rep;
  rep.picard_iterations = mild.iterations;
  rep.llg_steps = direct.steps;
  rep.llg_dt = direct.dt;
  rep.warnings = mild.warnings;
  for (std::size_t k = 0; k < mild.trajectory.size(); ++k) {
    const double t = mild.trajectory.times[k];
    const double d = relative_l2(gradient_magnitude(direct.trajectory.states[k]), pointwise_magnitude(mild.trajectory.states[k]));
    if (std::abs(direct.trajectory.times[k] - t) > 1e-12 * std::max(1.0, t))
      throw InvalidArgument("solver output times do not align");
    rep.times.push_back(t);
    rep.discrepancy.push_back(d);
    rep.sup_discrepancy = std::max(rep.sup_discrepancy, d);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Numerical uniqueness proxy: two discretizations of the same data.

struct UniquenessConfig {
  double lambda = 1.0;
  double T = 0.1;
  double dt_fraction = 0.5;
  RkScheme scheme_a = RkScheme::rk2;
  RkScheme scheme_b = RkScheme::rk2;
  /// Second run uses dt / refinement.
  int refinement = 2;
  /// ||grad m0||_{M^{2,2}} above this is large data: never PASS.
  double smallness = 0.05;
  /// Allowed initial transient, in steps of the coarse run.
  int max_transient = 5;
  /// Increase of the compensated quantity attributed to discretization error.
  double tolerance = 1e-12;
};

struct UniquenessRecord {
  std::vector<double> times;
  std::vector<double> difference;   // ||m_a - m_b||_{L^2}
  std::vector<double> compensated;  // t^{-1/2} ||m_a - m_b||_{L^2}^2
  int transient = 0;                // samples before the compensated series stops increasing
  double max_increase = 0.0;        // largest step increase after the transient
  double order_estimate = 0.0;      // log2 of the final difference ratio under one more refinement
  bool small = true;
  double data_norm = 0.0;
  std::string status;               // PASS, FAIL or INCONCLUSIVE

  CsvTable table() const {
    CsvTable t("t,difference_l2,compensated");
    for (std::size_t k = 0; k < times.size(); ++k) t.row({times[k], difference[k], compensated[k]});
    return t;
  }
};

inline UniquenessRecord uniqueness_experiment(const SpinField& m0, const UniquenessConfig& uc) {
  const Grid& g = m0.grid();
  LlgConfig a;
  a.lambda = uc.lambda;
  a.T = uc.T;
  a.dt = uc.dt_fraction * stability_cap(g, uc.lambda);
  a.scheme = uc.scheme_a;
  a.record_morrey = false;
  // Align the coarse step with T so both runs share every coarse time.
  const int na = std::max(1, static_cast<int>(std::ceil(uc.T / a.dt - 1e-9)));
  a.dt = uc.T / na;
  LlgConfig b = a;
  b.dt = a.dt / uc.refinement;
  b.scheme = uc.scheme_b;
  b.output_every = uc.refinement;
  LlgConfig c = b;
  c.dt = b.dt / uc.refinement;
  c.output_every = uc.refinement * uc.refinement;
  const auto ra = solve_llg(m0, a);
  const auto rb = solve_llg(m0, b);
  const auto rc = solve_llg(m0, c);
  auto l2_diff = [&](const SpinField& x, const SpinField& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 d = x[i] - y[i];
      s += dot(d, d);
    }
    return s * g.cell_volume();
  };

  UniquenessRecord rec;
  rec.data_norm = gradient_morrey22(m0, make_lattice(g));
  rec.small = rec.data_norm <= uc.smallness;
  for (std::size_t k = 0; k < ra.trajectory.size(); ++k) {
    const double t = ra.trajectory.times[k];
    const double s = l2_diff(ra.trajectory.states[k], rb.trajectory.states[k]);
    rec.times.push_back(t);
    rec.difference.push_back(std::sqrt(s));
    rec.compensated.push_back(t > 0.0 ? s / std::sqrt(t) : 0.0);
  }
  const double fine = std::sqrt(l2_diff(rb.trajectory.back(), rc.trajectory.back()));
  rec.order_estimate = fine > 0.0 && rec.difference.back() > 0.0
                           ? std::log(rec.difference.back() / fine) / std::log(static_cast<double>(uc.refinement))
                           : 0.0;
  // First sample index from which the compensated series never increases by more than the tolerance.
  auto rises = [&](std::size_t k) { return rec.compensated[k] - rec.compensated[k - 1] > uc.tolerance; };
  std::size_t start = rec.compensated.size() ? rec.compensated.size() - 1 : 0;
  while (start > 1 && !rises(start)) --start;
  rec.transient = start > 1 || (start == 1 && rises(1)) ? static_cast<int>(start) : 0;
  for (std::size_t k = static_cast<std::size_t>(rec.transient) + 1; k < rec.compensated.size(); ++k)
    rec.max_increase = std::max(rec.max_increase, rec.compensated[k] - rec.compensated[k - 1]);
  const bool monotone = rec.transient < uc.max_transient;
  if (!rec.small)
    rec.status = "INCONCLUSIVE";
  else
    rec.status = monotone ? "PASS" : "FAIL";
  return rec;
}

// ---------------------------------------------------------------------------
// Compensated sup-norm decay report.

struct DecayTable {
  GradientDecay series;
  double max_first = 0.0;
  double max_second = 0.0;
  bool pass = false;

  CsvTable table() const {
    CsvTable t("t,t_half_sup_grad,t_sup_hessian");
    for (std::size_t k = 0; k < series.times.size(); ++k) t.row({series.times[k], series.first[k], series.second[k]});
    return t;
  }
};

/// Bounded when, after the first 10% of the window, the max over the second half is
/// at most twice the max over the first half, for both compensated series.
inline bool bounded_series(const std::vector<double>& times, const std::vector<double>& v) {
  if (times.empty()) return true;
  const double T = times.back();
  const double start = 0.1 * T, mid = 0.5 * (start + T);
  double first = 0.0, second = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] <= start) continue;
    if (!std::isfinite(v[k])) return false;
    (times[k] <= mid ? first : second) = std::max(times[k] <= mid ? first : second, v[k]);
  }
  return second <= 2.0 * first;
}

inline DecayTable decay_report(const Trajectory<SpinField>& traj) {
  DecayTable d;
  d.series = gradient_decay_series(traj);
  for (double v : d.series.first) d.max_first = std::max(d.max_first, v);
  for (double v : d.series.second) d.max_second = std::max(d.max_second, v);
  d.pass = bounded_series(d.series.times, d.series.first) && bounded_series(d.series.times, d.series.second);
  return d;
}

// ---------------------------------------------------------------------------
// Mollify-and-project study.

struct MollificationRow {
  double k = 0.0;
  double raw_norm = 0.0;
  double mollified_norm = 0.0;
  double ratio = 0.0;
  double min_norm = 0.0;
  double max_norm = 0.0;
  bool pass = false;
};

struct MollificationStudy {
  std::vector<MollificationRow> rows;
  double bound = 8.0;
  bool pass = false;

  CsvTable table() const {
    CsvTable t("k,raw_grad_m22,mollified_grad_m22,ratio,bound,min_norm,max_norm,pass");
    for (const auto& r : rows)
      t.row({r.k, r.raw_norm, r.mollified_norm, r.ratio, bound, r.min_norm, r.max_norm, r.pass ? 1.0 : 0.0});
    return t;
  }
};

inline MollificationStudy mollification_study(const SpinField& raw, const std::vector<double>& ks, double bound = 8.0) {
  const BallLattice lat = make_lattice(raw.grid());
  MollificationStudy s;
  s.bound = bound;
  s.pass = true;
  const double raw_norm = gradient_morrey22(raw, lat);
  for (double k : ks) {
    MollificationRow r;
    r.k = k;
    r.raw_norm = raw_norm;
    try {
      const auto md = mollify_and_project(raw, k);
      r.mollified_norm = gradient_morrey22(md.projected, lat);
      r.ratio = raw_norm > 0.0 ? r.mollified_norm / raw_norm : 0.0;
      r.min_norm = md.min_norm;
      r.max_norm = md.max_norm;
      r.pass = r.ratio <= bound && r.min_norm >= 0.75 && r.max_norm <= 1.0 + 1e-12;
    } catch (const MollificationTooWeak& e) {
      r.min_norm = e.min_norm();
      r.pass = false;
    }
    s.pass = s.pass && r.pass;
    s.rows.push_back(r);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Semigroup decay suite over the bump family.

struct DecaySuiteRow {
  double width = 0.0;
  DecayReport report;
  bool pass = false;  // bounded by c_max and non-increasing over the final decade
};

struct DecaySuite {
  std::vector<DecaySuiteRow> rows;
  bool pass = false;

  CsvTable table() const {
    CsvTable t("width,p,p_tilde,q,order,max_ratio,c_max,final_decade_nonincreasing,pass");
    for (const auto& r : rows)
      t.row({r.width, r.report.p, r.report.p_tilde, r.report.q, static_cast<double>(r.report.order), r.report.max_ratio,
             r.report.c_max, r.report.final_decade_nonincreasing ? 1.0 : 0.0, r.pass ? 1.0 : 0.0});
    return t;
  }
  CsvTable series_table() const {
    CsvTable t("width,p,p_tilde,order,t,ratio");
    for (const auto& r : rows)
      for (std::size_t k = 0; k < r.report.t_samples.size(); ++k)
        t.row({r.width, r.report.p, r.report.p_tilde, static_cast<double>(r.report.order), r.report.t_samples[k],
               r.report.ratio_series[k]});
    return t;
  }
};

/// (p, p~) in {(2,2), (2,4), (2,6)} (those admissible in dimension n), orders 0 and 1, q = min(2, n).
inline DecaySuite decay_suite(const Grid& g, double lambda, double c_max = 50.0) {
  const SemigroupParams sp{lambda};
  const auto ts = default_decay_times(g, sp);
  const BallLattice lat = make_lattice(g);
  const double q = std::min(2.0, static_cast<double>(g.dim()));
  DecaySuite s;
  s.pass = true;
  for (double w : standard_bump_widths(g)) {
    const auto bump = gaussian_bump(g, w);
    for (double pt : {2.0, 4.0, 6.0}) {
      if (pt > 2.0 * (g.dim() + 1)) continue;
      for (int order : {0, 1}) {
        DecaySuiteRow r;
        r.width = w;
        r.report = verify_decay(bump, 2.0, pt, q, ts, sp, order, c_max, &lat);
        r.pass = r.report.pass && r.report.final_decade_nonincreasing;
        s.pass = s.pass && r.pass;
        s.rows.push_back(std::move(r));
      }
    }
  }
  return s;
}

} // namespace llglab
