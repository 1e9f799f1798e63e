#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "field.hpp"
#include "spectral.hpp"

namespace llglab {

enum class InitialKind { constant, equatorial_wave, bump_chart, rough_mollified };

inline InitialKind parse_initial_kind(const std::string& s) {
  if (s == "constant") return InitialKind::constant;
  if (s == "equatorial_wave") return InitialKind::equatorial_wave;
  if (s == "bump_chart") return InitialKind::bump_chart;
  if (s == "rough_mollified") return InitialKind::rough_mollified;
  throw InvalidArgument("unknown initial-data kind '" + s + "'");
}

inline std::string kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::constant: return "constant";
    case InitialKind::equatorial_wave: return "equatorial_wave";
    case InitialKind::bump_chart: return "bump_chart";
    case InitialKind::rough_mollified: return "rough_mollified";
  }
  return "?";
}

struct InitialDataSpec {
  InitialKind kind = InitialKind::constant;
  double amplitude = 0.1;
  int wavenumber = 1;
  /// Gaussian width of bump_chart in units of L.
  double width = 0.1;
  /// Mollifier scale k: the kernel is supported in a ball of radius 1/k.
  double mollification_k = 4.0;
  Vec3 m_infinity{0.0, 0.0, 1.0};
  std::uint64_t seed = 1;
};

inline Vec3 unit_or_throw(const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("m_infinity must be a nonzero finite vector");
  return (1.0 / n) * v;
}

/// A unit vector orthogonal to e (deterministic choice).
inline Vec3 orthogonal_unit(const Vec3& e) {
  const Vec3 probe = std::abs(e[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 o = probe - dot(probe, e) * e;
  return (1.0 / norm(o)) * o;
}

/// m = (cos theta, sin theta, 0) with theta = amplitude sin(2 pi k x / L).
inline SpinField equatorial_wave(const Grid& g, double amplitude, int k = 1) {
  const double w = 2.0 * std::numbers::pi * k / g.box_length();
  VectorField v = VectorField::generate(g, [&](const auto& x) {
    const double th = amplitude * std::sin(w * x[0]);
    return Vec3{std::cos(th), std::sin(th), 0.0};
  });
  return SpinField::from_unit_vectors(std::move(v), 1e-14);
}

/// Tilt of m_inf by the angle amplitude * exp(-|x - c|^2 / (2 w^2)) toward a fixed orthogonal direction.
inline SpinField bump_chart(const Grid& g, double amplitude, double width_fraction, const Vec3& m_inf) {
  const Vec3 e = unit_or_throw(m_inf);
  const Vec3 o = orthogonal_unit(e);
  const double w = width_fraction * g.box_length();
  const double c = 0.5 * g.box_length();
  VectorField v = VectorField::generate(g, [&](const auto& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) r2 += (x[static_cast<std::size_t>(d)] - c) * (x[static_cast<std::size_t>(d)] - c);
    const double beta = amplitude * std::exp(-r2 / (2.0 * w * w));
    return std::cos(beta) * e + std::sin(beta) * o;
  });
  return SpinField::project(std::move(v));
}

/// Seeded rough unit field: Pi(m_inf + amplitude * xi) with xi i.i.d. standard normal per point and component.
inline SpinField rough_raw(const Grid& g, double amplitude, const Vec3& m_inf, std::uint64_t seed) {
  const Vec3 e = unit_or_throw(m_inf);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorField v(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = nd(rng), b = nd(rng), c = nd(rng);
    v[i] = e + amplitude * Vec3{a, b, c};
  }
  return SpinField::project(std::move(v));
}

/// Sampled bump exp(-1/(1 - |k x|^2)) centred at the origin, normalized to unit discrete mass.
inline ScalarField mollifier_kernel(const Grid& g, double k) {
  if (!(k > 0.0)) throw InvalidArgument("mollification_k must be positive");
  ScalarField ker(g);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    double y2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      const double o = g.wrapped_offset(0, c[static_cast<std::size_t>(d)]) * g.spacing() * k;
      y2 += o * o;
    }
    ker[i] = y2 < 1.0 ? std::exp(-1.0 / (1.0 - y2)) : 0.0;
    total += ker[i];
  }
  for (auto& x : ker.values()) x /= total;
  return ker;
}

/// Periodic convolution of each component with the kernel, before projection.
inline VectorField mollify(const VectorField& v, const ScalarField& kernel) {
  const Spectrum kh = forward(kernel);
  VectorField out(v.grid());
  for (int c = 0; c < 3; ++c) {
    Spectrum s = forward(component(v, c));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= kh[i];
    const ScalarField r = inverse_real(std::move(s));
    for (std::size_t i = 0; i < v.size(); ++i) out[i][static_cast<std::size_t>(c)] = r[i];
  }
  return out;
}

struct MollifiedData {
  SpinField raw;
  VectorField smoothed;  // before projection
  SpinField projected;
  double min_norm = 0.0;
  double max_norm = 0.0;
};

/// Mollify-and-project: checks 3/4 <= |smoothed| <= 1 pointwise before normalizing.
inline MollifiedData mollify_and_project(const SpinField& raw, double k) {
  VectorField sm = mollify(raw.field(), mollifier_kernel(raw.grid(), k));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& x : sm.values()) {
    lo = std::min(lo, norm(x));
    hi = std::max(hi, norm(x));
  }
  if (lo < 0.75) throw MollificationTooWeak(lo);
  SpinField proj = SpinField::project(sm);
  return MollifiedData{raw, std::move(sm), std::move(proj), lo, hi};
}

inline SpinField generate_initial_data(const InitialDataSpec& spec, const Grid& g) {
  switch (spec.kind) {
    case InitialKind::constant: return SpinField::constant(g, unit_or_throw(spec.m_infinity));
    case InitialKind::equatorial_wave: return equatorial_wave(g, spec.amplitude, spec.wavenumber);
    case InitialKind::bump_chart: return bump_chart(g, spec.amplitude, spec.width, spec.m_infinity);
    case InitialKind::rough_mollified:
      return mollify_and_project(rough_raw(g, spec.amplitude, spec.m_infinity, spec.seed), spec.mollification_k).projected;
  }
  throw InvalidArgument("unknown initial-data kind");
}

} // namespace llglab
