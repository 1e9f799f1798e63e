#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "field.hpp"
#include "spectral.hpp"
#include "trajectory.hpp"

namespace llglab {

/// Sampled centers (every stride-th point per axis) and dyadic radii in
/// units of the grid spacing: 1, 2, 4, ... up to at most N/2 cells, so that
/// every radius is at most L/2.
struct BallLattice {
  Grid grid;
  int stride = 1;
  std::vector<int> radii_cells;

  double radius(std::size_t i) const { return radii_cells[i] * grid.spacing(); }

  std::vector<std::size_t> centers() const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const auto c = grid.coords(f);
      bool on = true;
      for (int d = 0; d < grid.dim(); ++d) on = on && c[static_cast<std::size_t>(d)] % stride == 0;
      if (on) out.push_back(f);
    }
    return out;
  }
};

/// Lattice with stride 1 for N < 64 and 2 otherwise; radii up to max_cells.
inline BallLattice make_lattice(const Grid& g, int stride = 0, int max_cells = 0) {
  BallLattice lat{g, stride, {}};
  if (lat.stride <= 0) lat.stride = g.points_per_axis() >= 64 ? 2 : 1;
  const int cap = max_cells > 0 ? std::min(max_cells, g.points_per_axis() / 2) : g.points_per_axis() / 2;
  for (int r = 1; r <= cap; r *= 2) lat.radii_cells.push_back(r);
  return lat;
}

inline void validate_lattice(const BallLattice& lat) {
  if (lat.stride < 1) throw InvalidArgument("lattice stride must be >= 1");
  if (lat.radii_cells.empty()) throw InvalidArgument("lattice has no radii");
  for (std::size_t i = 0; i < lat.radii_cells.size(); ++i) {
    const int r = lat.radii_cells[i];
    if (r < 1 || 2 * r > lat.grid.points_per_axis()) throw InvalidArgument("lattice radius outside [h, L/2]");
    if (i > 0 && r != 2 * lat.radii_cells[i - 1]) throw InvalidArgument("lattice radii must double");
  }
}

struct MorreyReport {
  double value = 0.0;
  double p = 0.0;
  double q = 0.0;
  std::size_t witness_center = 0;
  double witness_radius = 0.0;
  int witness_radius_cells = 0;
  int stride = 1;
  std::vector<int> radii_cells;
};

namespace detail {

/// Grid coordinates along one axis within `radius_cells` of c, paired with
/// their signed offsets and sorted by coordinate.
inline std::vector<std::pair<int, int>> axis_window(int c, int radius_cells, int n) {
  std::vector<std::pair<int, int>> w;
  const int lo = std::max(-radius_cells, -n / 2);
  const int hi = std::min(radius_cells, n / 2 - 1);
  for (int o = lo; o <= hi; ++o) w.emplace_back(((c + o) % n + n) % n, o);
  std::sort(w.begin(), w.end());
  return w;
}

} // namespace detail

/// Sum of density over the closed torus ball of integer radius R (cells)
/// about `center`. Points are visited in increasing flat index.
inline double ball_sum(const ScalarField& density, std::size_t center, int radius_cells) {
  const Grid& g = density.grid();
  const int n = g.points_per_axis();
  const auto c = g.coords(center);
  const long r2 = static_cast<long>(radius_cells) * radius_cells;
  // Unused leading axes are padded so the grid's axes are always innermost.
  const int pad = 3 - g.dim();
  std::vector<std::pair<int, int>> axes[3];
  for (int d = 0; d < 3; ++d)
    axes[d] = d >= pad ? detail::axis_window(c[static_cast<std::size_t>(d - pad)], radius_cells, n)
                       : std::vector<std::pair<int, int>>{{0, 0}};
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t s1 = nn;
  const std::size_t s0 = nn * nn;
  double sum = 0.0;
  for (const auto& [a0, o0] : axes[0]) {
    const long d0 = static_cast<long>(o0) * o0;
    if (d0 > r2) continue;
    for (const auto& [a1, o1] : axes[1]) {
      const long d1 = d0 + static_cast<long>(o1) * o1;
      if (d1 > r2) continue;
      const std::size_t base = static_cast<std::size_t>(a0) * s0 + static_cast<std::size_t>(a1) * s1;
      for (const auto& [a2, o2] : axes[2]) {
        if (d1 + static_cast<long>(o2) * o2 > r2) continue;
        sum += density[base + static_cast<std::size_t>(a2)];
      }
    }
  }
  return sum;
}

/// Number of grid points in the closed torus ball of radius R cells.
inline std::size_t ball_count(const Grid& g, int radius_cells) {
  ScalarField ones(g);
  for (auto& v : ones.values()) v = 1.0;
  return static_cast<std::size_t>(ball_sum(ones, 0, radius_cells));
}

/// |f|^p pointwise.
inline ScalarField power_density(const ScalarField& magnitude_field, double p) {
  ScalarField d(magnitude_field.grid());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::pow(magnitude_field[i], p);
  return d;
}

/// (r^{q-n} * sum * h^n)^{1/p}, the per-ball Morrey quantity.
inline double ball_value(double sum, double radius, const Grid& g, double p, double q) {
  return std::pow(std::pow(radius, q - g.dim()) * sum * g.cell_volume(), 1.0 / p);
}

inline void check_exponents(const Grid& g, double p, double q) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("Morrey exponent p must satisfy 1 <= p < inf");
  if (!(q >= 0.0) || q > g.dim()) throw InvalidArgument("Morrey exponent q must satisfy 0 <= q <= n");
}

/// Discrete M^{p,q} norm of a pointwise-magnitude field over a ball lattice.
inline MorreyReport morrey_norm_of_magnitude(const ScalarField& magnitude_field, double p, double q,
                                             const BallLattice& lat) {
  validate_lattice(lat);
  require_same_grid(magnitude_field.grid(), lat.grid);
  check_exponents(lat.grid, p, q);
  const auto centers = lat.centers();
  if (centers.empty()) throw InvalidArgument("lattice has no centers");
  const ScalarField density = power_density(magnitude_field, p);
  MorreyReport rep;
  rep.p = p;
  rep.q = q;
  rep.stride = lat.stride;
  rep.radii_cells = lat.radii_cells;
  rep.value = -1.0;
  for (std::size_t ri = 0; ri < lat.radii_cells.size(); ++ri) {
    const double r = lat.radius(ri);
    for (std::size_t c : centers) {
      const double v = ball_value(ball_sum(density, c, lat.radii_cells[ri]), r, lat.grid, p, q);
      if (v > rep.value) {
        rep.value = v;
        rep.witness_center = c;
        rep.witness_radius = r;
        rep.witness_radius_cells = lat.radii_cells[ri];
      }
    }
  }
  return rep;
}

template <class T>
MorreyReport morrey_norm(const Field<T>& f, double p, double q, const BallLattice& lat) {
  return morrey_norm_of_magnitude(pointwise_magnitude(f), p, q, lat);
}
template <class T>
MorreyReport morrey_norm(const std::vector<Field<T>>& fs, double p, double q, const BallLattice& lat) {
  return morrey_norm_of_magnitude(pointwise_magnitude(fs), p, q, lat);
}

/// Re-evaluates the Morrey quantity at the report's witness ball.
template <class T>
double recompute_at_witness(const Field<T>& f, const MorreyReport& rep) {
  const ScalarField density = power_density(pointwise_magnitude(f), rep.p);
  return ball_value(ball_sum(density, rep.witness_center, rep.witness_radius_cells), rep.witness_radius, f.grid(),
                    rep.p, rep.q);
}

/// C with ||f||_{M^{p1,q}} <= C ||f||_{M^{p2,q}} on the lattice (p1 < p2), from
/// the discrete Hoelder inequality on each ball.
inline double holder_constant(const BallLattice& lat, double q, double p1, double p2) {
  validate_lattice(lat);
  const double e = 1.0 / p1 - 1.0 / p2;
  double c = 0.0;
  for (std::size_t ri = 0; ri < lat.radii_cells.size(); ++ri) {
    const double vol = static_cast<double>(ball_count(lat.grid, lat.radii_cells[ri])) * lat.grid.cell_volume();
    c = std::max(c, std::pow(lat.radius(ri), (q - lat.grid.dim()) * e) * std::pow(vol, e));
  }
  return c;
}

inline std::string morrey_csv_header() { return "p,q,value,witness_cx,witness_cy,witness_cz,witness_r"; }

inline std::string morrey_csv_row(const MorreyReport& rep, const Grid& g) {
  const auto c = g.coords(rep.witness_center);
  return csv_line({rep.p, rep.q, rep.value, static_cast<double>(c[0]), static_cast<double>(c[1]),
                   static_cast<double>(c[2]), rep.witness_radius});
}

// ---------------------------------------------------------------------------
// Parabolic Morrey norm over space-time cylinders B_r(x) x [t - r^2, t].

struct CylinderSpec {
  std::size_t center = 0;
  double t0 = 0.0;
  int radius_cells = 1;
  /// Number of dyadic sub-radii R0, R0/2, ... to sample (0 = down to one cell).
  int levels = 0;
  /// Stride between sampled sub-cylinder centers.
  int center_stride = 1;
};

namespace detail {

/// Integral over [a, b] of the piecewise-linear interpolant of (times, values).
inline double integrate_interpolant(const std::vector<double>& times, const std::vector<double>& values, double a,
                                    double b) {
  auto value_at = [&](double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return values.front();
    if (it == times.end()) return values.back();
    const auto i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return (1.0 - w) * values[i - 1] + w * values[i];
  };
  double total = 0.0;
  double prev_t = a, prev_v = value_at(a);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] <= a) continue;
    if (times[i] >= b) break;
    total += 0.5 * (times[i] - prev_t) * (values[i] + prev_v);
    prev_t = times[i];
    prev_v = values[i];
  }
  total += 0.5 * (b - prev_t) * (value_at(b) + prev_v);
  return total;
}

} // namespace detail

struct ParabolicMorreyReport {
  double value = 0.0;
  std::size_t witness_center = 0;
  double witness_time = 0.0;
  double witness_radius = 0.0;
  std::size_t cylinders = 0;
};

inline void check_cylinder_coverage(const std::vector<double>& times, const Grid& g, const CylinderSpec& cyl) {
  if (times.empty()) throw CoverageError("empty trajectory");
  const double r0 = cyl.radius_cells * g.spacing();
  const double eps = 1e-12 * std::max(1.0, cyl.t0);
  if (cyl.radius_cells < 1 || 2 * cyl.radius_cells > g.points_per_axis())
    throw InvalidArgument("cylinder radius outside [h, L/2]");
  if (r0 * r0 > cyl.t0 + eps) throw CoverageError("cylinder radius exceeds sqrt(t0)");
  if (times.front() > cyl.t0 - r0 * r0 + eps || times.back() < cyl.t0 - eps)
    throw CoverageError("trajectory does not cover [t0 - r0^2, t0]");
}

/// sup over sampled P_r(z) inside P_{r0}(z0) of (r^{-n} int int |g|^2)^{1/2}
/// for a trajectory of pointwise magnitudes |g| (typically |grad m|).
inline ParabolicMorreyReport parabolic_morrey_norm(const Trajectory<ScalarField>& traj, const CylinderSpec& cyl) {
  if (traj.empty()) throw CoverageError("empty trajectory");
  const Grid& g = traj.states.front().grid();
  check_cylinder_coverage(traj.times, g, cyl);
  if (cyl.center_stride < 1) throw InvalidArgument("center stride must be >= 1");
  const double h = g.spacing();
  const double r0 = cyl.radius_cells * h;

  std::vector<ScalarField> density;
  density.reserve(traj.size());
  for (const auto& s : traj.states) density.push_back(power_density(s, 2.0));

  std::vector<int> radii;
  for (int r = cyl.radius_cells; r >= 1; r /= 2) {
    radii.push_back(r);
    if (cyl.levels > 0 && static_cast<int>(radii.size()) >= cyl.levels) break;
    if (r % 2 != 0) break;
  }

  ParabolicMorreyReport rep;
  rep.value = -1.0;
  const auto c0 = g.coords(cyl.center);
  for (int rc : radii) {
    const double r = rc * h;
    const long slack = cyl.radius_cells - rc;
    // Sub-ball centers whose ball stays inside B_{r0}(z0).
    std::vector<std::size_t> centers;
    for (std::size_t f = 0; f < g.size(); ++f) {
      const auto c = g.coords(f);
      long d2 = 0;
      bool on = true;
      for (int d = 0; d < g.dim(); ++d) {
        const auto k = static_cast<std::size_t>(d);
        const long o = g.wrapped_offset(c0[k], c[k]);
        d2 += o * o;
        on = on && (o % cyl.center_stride == 0);
      }
      if (on && d2 <= slack * slack) centers.push_back(f);
    }
    // Sub-cylinder tops: t0 and every stored time in [t0 - r0^2 + r^2, t0).
    std::vector<double> tops{cyl.t0};
    for (double t : traj.times)
      if (t < cyl.t0 && t >= cyl.t0 - r0 * r0 + r * r - 1e-12 * std::max(1.0, cyl.t0)) tops.push_back(t);

    std::vector<double> ball(traj.size());
    for (std::size_t c : centers) {
      for (std::size_t k = 0; k < traj.size(); ++k) ball[k] = ball_sum(density[k], c, rc) * g.cell_volume();
      for (double top : tops) {
        const double integral = detail::integrate_interpolant(traj.times, ball, top - r * r, top);
        const double v = std::sqrt(std::pow(r, -g.dim()) * integral);
        ++rep.cylinders;
        if (v > rep.value) {
          rep.value = v;
          rep.witness_center = c;
          rep.witness_time = top;
          rep.witness_radius = r;
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Solution-space norms of a trajectory of complex n-tuples.

struct XptReport {
  double R1 = 0.0;
  double R2 = 0.0;
  double R3 = 0.0;
  double total = 0.0;
  double p = 0.0;
  double T = 0.0;
  std::size_t R1_index = 0;
  std::size_t R2_index = 0;
  std::size_t R3_index = 0;
};

/// Pointwise magnitude of the full gradient (sum over components and axes).
inline ScalarField gradient_magnitude(const ComplexTuple& u) {
  std::vector<ComplexField> parts;
  for (const auto& c : u)
    for (auto& d : gradient(c)) parts.push_back(std::move(d));
  return pointwise_magnitude(parts);
}

inline XptReport xpt_norm(const Trajectory<ComplexTuple>& traj, double p, const BallLattice& lat) {
  if (traj.empty()) throw InvalidArgument("empty trajectory");
  if (!(p > 2.0)) throw InvalidArgument("solution-space exponent p must exceed 2");
  XptReport rep;
  rep.p = p;
  rep.T = traj.times.back();
  const double q = std::min(2.0, static_cast<double>(lat.grid.dim()));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const ScalarField mag = pointwise_magnitude(traj.states[k]);
    const double r3 = morrey_norm_of_magnitude(mag, 2.0, q, lat).value;
    if (r3 > rep.R3) {
      rep.R3 = r3;
      rep.R3_index = k;
    }
    if (t <= 0.0) continue;
    const double r1 = std::pow(t, 0.5 - 1.0 / p) * morrey_norm_of_magnitude(mag, p, q, lat).value;
    if (r1 > rep.R1) {
      rep.R1 = r1;
      rep.R1_index = k;
    }
    const double r2 =
        std::sqrt(t) * morrey_norm_of_magnitude(gradient_magnitude(traj.states[k]), 2.0, q, lat).value;
    if (r2 > rep.R2) {
      rep.R2 = r2;
      rep.R2_index = k;
    }
  }
  rep.total = rep.R1 + rep.R2 + rep.R3;
  return rep;
}

inline double ypt_norm(const XptReport& rep) { return rep.R1 + rep.R2; }
inline double ypt_norm(const Trajectory<ComplexTuple>& traj, double p, const BallLattice& lat) {
  return ypt_norm(xpt_norm(traj, p, lat));
}

} // namespace llglab
