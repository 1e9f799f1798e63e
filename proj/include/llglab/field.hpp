#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace llglab {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr Complex kI{0.0, 1.0};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) {
  a[0] += b[0];
  a[1] += b[1];
  a[2] += b[2];
  return a;
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Samples of a quantity of type T at every point of a grid, row-major.
template <class T>
class Field {
public:
  using value_type = T;

  explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), T{}) {}
  Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidArgument("field size does not match grid");
  }

  /// Field with values fn(x) at the physical grid positions.
  template <class Fn>
  static Field generate(const Grid& grid, Fn&& fn) {
    Field f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values_[i] = fn(grid.position(i));
    return f;
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  Field& operator+=(const Field& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] = values_[i] - o.values_[i];
    return *this;
  }
  template <class S>
  Field& operator*=(const S& s) {
    for (auto& v : values_) v = s * v;
    return *this;
  }

private:
  Grid grid_;
  std::vector<T> values_;
};

template <class T>
Field<T> operator+(Field<T> a, const Field<T>& b) {
  a += b;
  return a;
}
template <class T>
Field<T> operator-(Field<T> a, const Field<T>& b) {
  a -= b;
  return a;
}
template <class S, class T>
Field<T> operator*(const S& s, Field<T> a) {
  a *= s;
  return a;
}

using ScalarField = Field<double>;
using ComplexField = Field<Complex>;
using VectorField = Field<Vec3>;

/// n-tuple of complex fields, one per spatial direction.
using ComplexTuple = std::vector<ComplexField>;

/// Unit-vector field. Every constructor projects onto the sphere.
class SpinField {
public:
  /// Pointwise projection y -> y/|y|; throws on a vanishing vector.
  static SpinField project(VectorField v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = norm(v[i]);
      if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("cannot project a zero or non-finite vector onto the sphere");
      v[i] = (1.0 / r) * v[i];
    }
    return SpinField(std::move(v));
  }
  /// Adopts samples that are already unit length (within tol) without rounding them again.
  static SpinField from_unit_vectors(VectorField v, double tol = 1e-12) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(std::abs(norm(v[i]) - 1.0) <= tol)) throw InvalidArgument("vector is not of unit length");
    return SpinField(std::move(v));
  }
  static SpinField constant(const Grid& grid, const Vec3& direction) {
    return project(VectorField::generate(grid, [&](const auto&) { return direction; }));
  }

  const Grid& grid() const noexcept { return field_.grid(); }
  std::size_t size() const noexcept { return field_.size(); }
  const Vec3& operator[](std::size_t i) const noexcept { return field_[i]; }
  const VectorField& field() const noexcept { return field_; }

private:
  explicit SpinField(VectorField v) : field_(std::move(v)) {}
  VectorField field_;
};

inline ScalarField component(const VectorField& v, int c) {
  ScalarField s(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i][static_cast<std::size_t>(c)];
  return s;
}

inline VectorField from_components(const ScalarField& x, const ScalarField& y, const ScalarField& z) {
  require_same_grid(x.grid(), y.grid());
  require_same_grid(x.grid(), z.grid());
  VectorField v(x.grid());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {x[i], y[i], z[i]};
  return v;
}

inline ComplexField to_complex(const ScalarField& f) {
  ComplexField c(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i];
  return c;
}
inline ScalarField real_part(const ComplexField& f) {
  ScalarField r(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
  return r;
}
inline ScalarField imag_part(const ComplexField& f) {
  ScalarField r(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].imag();
  return r;
}

inline ComplexTuple zero_tuple(const Grid& grid, int n) {
  return ComplexTuple(static_cast<std::size_t>(n), ComplexField(grid));
}

// Pointwise magnitudes used by every norm in the library.
inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Complex& v) { return std::abs(v); }
inline double magnitude(const Vec3& v) { return norm(v); }

template <class T>
ScalarField pointwise_magnitude(const Field<T>& f) {
  ScalarField m(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = magnitude(f[i]);
  return m;
}

/// Pointwise Euclidean magnitude of a list of fields: (sum_k |f_k(x)|^2)^{1/2}.
template <class T>
ScalarField pointwise_magnitude(std::span<const Field<T>> fs) {
  if (fs.empty()) throw InvalidArgument("empty field list");
  ScalarField m(fs.front().grid());
  for (std::size_t i = 0; i < m.size(); ++i) {
    double s = 0.0;
    for (const auto& f : fs) {
      const double a = magnitude(f[i]);
      s += a * a;
    }
    m[i] = std::sqrt(s);
  }
  return m;
}
template <class T>
ScalarField pointwise_magnitude(const std::vector<Field<T>>& fs) {
  return pointwise_magnitude(std::span<const Field<T>>(fs));
}

/// Discrete L2 norm (sum |f|^2 h^n)^{1/2}.
template <class T>
double l2_norm(const Field<T>& f) {
  double s = 0.0;
  for (const auto& v : f.values()) {
    const double a = magnitude(v);
    s += a * a;
  }
  return std::sqrt(s * f.grid().cell_volume());
}
template <class T>
double l2_norm(const std::vector<Field<T>>& fs) {
  double s = 0.0;
  for (const auto& f : fs) {
    const double n = l2_norm(f);
    s += n * n;
  }
  return std::sqrt(s);
}

template <class T>
double sup_norm(const Field<T>& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, magnitude(v));
  return m;
}
template <class T>
double sup_norm(const std::vector<Field<T>>& fs) {
  return sup_norm(pointwise_magnitude(fs));
}

template <class T>
T mean(const Field<T>& f) {
  T s{};
  for (const auto& v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

inline ComplexTuple operator-(const ComplexTuple& a, const ComplexTuple& b) {
  if (a.size() != b.size()) throw InvalidArgument("tuple lengths differ");
  ComplexTuple r;
  r.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r.push_back(a[k] - b[k]);
  return r;
}
inline ComplexTuple operator+(const ComplexTuple& a, const ComplexTuple& b) {
  if (a.size() != b.size()) throw InvalidArgument("tuple lengths differ");
  ComplexTuple r;
  r.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r.push_back(a[k] + b[k]);
  return r;
}
inline ComplexTuple scaled(double s, ComplexTuple a) {
  for (auto& f : a) f *= s;
  return a;
}

} // namespace llglab
