#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "field.hpp"
#include "spectral.hpp"

namespace llglab {

/// Orthonormal tangent pair along a spin field with X x Y = m.
struct TangentFrame {
  VectorField X;
  VectorField Y;
};

/// Frames are built only where m3 >= -1 + margin.
inline constexpr double kPoleMargin = 0.05;

/// Parallel transport of (e1, e2) from the north pole along great circles.
/// Singular only at m = -e3.
inline TangentFrame build_frame(const SpinField& m, double margin = kPoleMargin) {
  const Grid& g = m.grid();
  TangentFrame fr{VectorField(g), VectorField(g)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& v = m[i];
    if (!(v[2] >= -1.0 + margin)) throw PoleProximity(i, v[2]);
    const double s = 1.0 / (1.0 + v[2]);
    fr.X[i] = {1.0 - v[0] * v[0] * s, -v[0] * v[1] * s, -v[0]};
    fr.Y[i] = {-v[0] * v[1] * s, 1.0 - v[1] * v[1] * s, -v[1]};
  }
  return fr;
}

/// Worst pointwise violation of |X| = |Y| = 1, <X,Y> = <X,m> = <Y,m> = 0, X x Y = m.
inline double frame_defect(const SpinField& m, const TangentFrame& fr) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto &X = fr.X[i], &Y = fr.Y[i], &v = m[i];
    worst = std::max({worst, std::abs(norm(X) - 1.0), std::abs(norm(Y) - 1.0), std::abs(dot(X, Y)),
                      std::abs(dot(X, v)), std::abs(dot(Y, v)), norm(cross(X, Y) - v)});
  }
  return worst;
}

/// Frame rotated by angle theta: (cos X + sin Y, -sin X + cos Y). Matches gauge_transform.
inline TangentFrame rotate_frame(const TangentFrame& fr, const ScalarField& theta) {
  TangentFrame out{fr.X, fr.Y};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double c = std::cos(theta[i]), s = std::sin(theta[i]);
    out.X[i] = c * fr.X[i] + s * fr.Y[i];
    out.Y[i] = (-s) * fr.X[i] + c * fr.Y[i];
  }
  return out;
}

/// Complex coefficients of the space-time gradient of m in the frame, and the connection.
struct GaugeState {
  ComplexTuple u;            // spatial components
  ComplexField u0;           // time component
  std::vector<ScalarField> a;
  ScalarField a0;            // time connection (zero unless frame time-derivative given)
  ScalarField a0_1;          // elliptic split of a0, filled by with_gauge_fields
  ScalarField a0_2;
  ScalarField theta;         // accumulated gauge phase, mean zero

  const Grid& grid() const { return u0.grid(); }
};

/// <v, X> + i <v, Y> pointwise.
inline ComplexField frame_coefficients(const VectorField& v, const TangentFrame& fr) {
  ComplexField c(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = {dot(v[i], fr.X[i]), dot(v[i], fr.Y[i])};
  return c;
}

inline ScalarField pairing(const VectorField& a, const VectorField& b) {
  ScalarField s(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = dot(a[i], b[i]);
  return s;
}

/// a0 = <d_t X, Y> with d_t X by centered differencing of frames built at t -/+ delta.
inline ScalarField time_connection(const TangentFrame& before, const TangentFrame& after, const TangentFrame& now,
                                   double delta) {
  ScalarField a0(now.X.grid());
  for (std::size_t i = 0; i < a0.size(); ++i) a0[i] = dot((0.5 / delta) * (after.X[i] - before.X[i]), now.Y[i]);
  return a0;
}

inline GaugeState derive_gauge(const SpinField& m, const VectorField& dt_m, const TangentFrame& fr) {
  const Grid& g = m.grid();
  require_same_grid(g, dt_m.grid());
  double scale = 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) scale = std::max(scale, norm(dt_m[i]));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(dot(dt_m[i], m[i])) > 1e-8 * scale) throw InvalidArgument("time derivative is not tangential to m");
  GaugeState st{{}, frame_coefficients(dt_m, fr), {}, ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
  for (int k = 0; k < g.dim(); ++k) {
    st.u.push_back(frame_coefficients(derivative(m.field(), k, 1), fr));
    st.a.push_back(pairing(derivative(fr.X, k, 1), fr.Y));
  }
  return st;
}

inline GaugeState derive_gauge(const SpinField& m, const VectorField& dt_m, const TangentFrame& fr,
                               const TangentFrame& before, const TangentFrame& after, double delta) {
  GaugeState st = derive_gauge(m, dt_m, fr);
  st.a0 = time_connection(before, after, fr, delta);
  return st;
}

/// u -> e^{-i theta} u, a -> a + grad theta (theta constant in time).
inline GaugeState gauge_transform(GaugeState st, const ScalarField& theta) {
  const Grid& g = theta.grid();
  require_same_grid(g, st.grid());
  auto rotate = [&](ComplexField& f) {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::polar(1.0, -theta[i]);
  };
  for (auto& c : st.u) rotate(c);
  rotate(st.u0);
  const auto grad = gradient(theta);
  for (std::size_t k = 0; k < st.a.size(); ++k) st.a[k] += grad[k];
  st.theta += theta;
  return st;
}

/// Phase theta = (-Laplacian)^{-1} div a with zero mean.
inline ScalarField coulomb_phase(const std::vector<ScalarField>& a) {
  return inverse_real(solve_neg_laplacian(divergence_spectrum(std::span<const ScalarField>(a))));
}

inline GaugeState coulomb_gauge_fix(const GaugeState& st) {
  if (st.a.empty()) throw InvalidArgument("state carries no spatial connection");
  return gauge_transform(st, coulomb_phase(st.a));
}

/// Connection and time-connection split recovered from u alone (Coulomb gauge).
struct GaugeFields {
  std::vector<ScalarField> a;
  ScalarField a0_1;
  ScalarField a0_2;
};

/// Mean-zero solution of -Laplacian w = sum_k d_k v_k.
inline ScalarField solve_div_source(const std::vector<ScalarField>& v) {
  return inverse_real(solve_neg_laplacian(divergence_spectrum(std::span<const ScalarField>(v))));
}

inline GaugeFields gauge_fields_from_u(const ComplexTuple& u, double lambda) {
  if (u.empty()) throw InvalidArgument("empty u");
  const Grid& g = u.front().grid();
  const auto n = u.size();
  if (static_cast<int>(n) != g.dim()) throw InvalidArgument("u needs one component per axis");
  GaugeFields out{{}, ScalarField(g), ScalarField(g)};

  // -Laplacian a_b = sum_k d_k Im(u_b conj(u_k))
  std::vector<ScalarField> src(n, ScalarField(g));
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < g.size(); ++i) src[k][i] = std::imag(u[b][i] * std::conj(u[k][i]));
    out.a.push_back(solve_div_source(src));
  }

  const ComplexField divu = divergence(u);
  ComplexField au(g);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) au[i] += out.a[k][i] * u[k][i];

  std::vector<ScalarField> s1(n, ScalarField(g)), s2(n, ScalarField(g));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Complex w1 = std::conj(u[k][i]) * divu[i];
      const Complex w2 = au[i] * std::conj(u[k][i]);
      s1[k][i] = lambda * w1.imag() - w1.real();
      s2[k][i] = lambda * w2.real() + w2.imag();
    }
  out.a0_1 = solve_div_source(s1);
  out.a0_2 = solve_div_source(s2);
  return out;
}

/// Replaces a by the Coulomb connection recovered from u and fills the a0 split.
inline GaugeState with_gauge_fields(GaugeState st, double lambda) {
  auto gf = gauge_fields_from_u(st.u, lambda);
  st.a = std::move(gf.a);
  st.a0_1 = std::move(gf.a0_1);
  st.a0_2 = std::move(gf.a0_2);
  return st;
}

/// Sup-norm residuals of the structural identities.
struct IdentityResiduals {
  double torsion = 0.0;    // D_a u_b - D_b u_a, spatial a, b
  double curvature = 0.0;  // d_a a_b - d_b a_a - Im(u_a conj(u_b))
  double u0_eq = 0.0;      // u0 - (lambda - i) sum_k D_k u_k
  double tension = 0.0;    // Laplacian m + |grad m|^2 m minus its frame expression
};

/// D_k f = d_k f + i a_k f.
inline ComplexField covariant_derivative(const ComplexField& f, const ScalarField& ak, int axis) {
  ComplexField d = derivative(f, axis, 1);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += kI * ak[i] * f[i];
  return d;
}

inline VectorField tension_field(const SpinField& m) {
  const Grid& g = m.grid();
  VectorField t = laplacian(m.field());
  ScalarField grad2(g);
  for (int k = 0; k < g.dim(); ++k) {
    const auto d = derivative(m.field(), k, 1);
    for (std::size_t i = 0; i < g.size(); ++i) grad2[i] += dot(d[i], d[i]);
  }
  for (std::size_t i = 0; i < g.size(); ++i) t[i] += grad2[i] * m[i];
  return t;
}

inline IdentityResiduals check_identities(const SpinField& m, const TangentFrame& fr, const GaugeState& st,
                                          double lambda) {
  const Grid& g = m.grid();
  const auto n = static_cast<std::size_t>(g.dim());
  IdentityResiduals r;
  std::vector<std::vector<ComplexField>> D(n);  // D[a][b] = D_a u_b
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) D[a].push_back(covariant_derivative(st.u[b], st.a[a], static_cast<int>(a)));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      r.torsion = std::max(r.torsion, sup_norm(D[a][b] - D[b][a]));
      const ScalarField lhs = derivative(st.a[b], static_cast<int>(a), 1) - derivative(st.a[a], static_cast<int>(b), 1);
      for (std::size_t i = 0; i < g.size(); ++i)
        r.curvature = std::max(r.curvature, std::abs(lhs[i] - std::imag(st.u[a][i] * std::conj(st.u[b][i]))));
    }

  ComplexField sum(g);
  for (std::size_t k = 0; k < n; ++k) sum += D[k][k];
  const Complex c{lambda, -1.0};
  for (std::size_t i = 0; i < g.size(); ++i) r.u0_eq = std::max(r.u0_eq, std::abs(st.u0[i] - c * sum[i]));

  // Frame expression: sum_k (d_k Re u_k - a_k Im u_k) X + (d_k Im u_k + a_k Re u_k) Y.
  ScalarField cx(g), cy(g);
  for (std::size_t k = 0; k < n; ++k) {
    const ComplexField du = derivative(st.u[k], static_cast<int>(k), 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      cx[i] += du[i].real() - st.a[k][i] * st.u[k][i].imag();
      cy[i] += du[i].imag() + st.a[k][i] * st.u[k][i].real();
    }
  }
  const VectorField tau = tension_field(m);
  for (std::size_t i = 0; i < g.size(); ++i)
    r.tension = std::max(r.tension, norm(tau[i] - (cx[i] * fr.X[i] + cy[i] * fr.Y[i])));
  return r;
}

} // namespace llglab
