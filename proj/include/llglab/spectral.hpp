#pragma once

#include <span>
#include <type_traits>
#include <vector>

#include "field.hpp"

namespace llglab {

/// Discrete Fourier coefficients of a field, FFT index order.
///
/// Forward transform is unnormalized, the inverse divides by N^dim, so
/// sum |f|^2 h^n = sum |c|^2 L^n / N^(2n).
class Spectrum {
public:
  explicit Spectrum(Grid grid) : grid_(std::move(grid)), coeffs_(grid_.size()) {}

  const Grid& grid() const noexcept { return grid_; }
  std::span<Complex> coeffs() noexcept { return coeffs_; }
  std::span<const Complex> coeffs() const noexcept { return coeffs_; }
  Complex& operator[](std::size_t i) noexcept { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const noexcept { return coeffs_[i]; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  Spectrum& operator+=(const Spectrum& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Spectrum& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  /// Multiply every coefficient by symbol(spectral index triple).
  template <class Symbol>
  Spectrum& apply(Symbol&& symbol) {
    const int n = grid_.points_per_axis();
    const int dim = grid_.dim();
    Index3 j{0, 0, 0};
    for (std::size_t f = 0; f < coeffs_.size(); ++f) {
      coeffs_[f] *= symbol(j);
      for (int d = dim - 1; d >= 0; --d) {
        auto& jd = j[static_cast<std::size_t>(d)];
        if (++jd < n) break;
        jd = 0;
      }
    }
    return *this;
  }

private:
  Grid grid_;
  std::vector<Complex> coeffs_;
};

inline Spectrum forward(const ComplexField& f) {
  Spectrum s(f.grid());
  std::copy(f.values().begin(), f.values().end(), s.coeffs().begin());
  f.grid().plans().forward(s.coeffs());
  return s;
}

inline Spectrum forward(const ScalarField& f) {
  Spectrum s(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) s[i] = f[i];
  f.grid().plans().forward(s.coeffs());
  return s;
}

inline ComplexField inverse(Spectrum s) {
  s.grid().plans().backward(s.coeffs());
  const double scale = 1.0 / static_cast<double>(s.size());
  std::vector<Complex> v(s.coeffs().begin(), s.coeffs().end());
  for (auto& x : v) x *= scale;
  return ComplexField(s.grid(), std::move(v));
}

/// Inverse transform keeping the real part (for spectra of real fields).
inline ScalarField inverse_real(Spectrum s) {
  s.grid().plans().backward(s.coeffs());
  const double scale = 1.0 / static_cast<double>(s.size());
  ScalarField r(s.grid());
  for (std::size_t i = 0; i < s.size(); ++i) r[i] = s[i].real() * scale;
  return r;
}

/// |k|^2 at a spectral index (true wavenumbers, Nyquist included).
inline double wavenumber_squared(const Grid& g, const Index3& j) {
  double k2 = 0.0;
  for (int d = 0; d < g.dim(); ++d) {
    const double k = g.wavenumber(j[static_cast<std::size_t>(d)]);
    k2 += k * k;
  }
  return k2;
}

/// Symbol of -div(grad): sum of squared first-derivative wavenumbers.
inline double div_grad_symbol(const Grid& g, const Index3& j) {
  double k2 = 0.0;
  for (int d = 0; d < g.dim(); ++d) {
    const double k = g.odd_wavenumber(j[static_cast<std::size_t>(d)]);
    k2 += k * k;
  }
  return k2;
}

/// Symbol (i k_axis)^order; the Nyquist mode is dropped for odd orders.
inline Complex derivative_symbol(const Grid& g, const Index3& j, int axis, int order) {
  const int ja = j[static_cast<std::size_t>(axis)];
  if (order == 1) return {0.0, g.odd_wavenumber(ja)};
  const double k = g.wavenumber(ja);
  return {-k * k, 0.0};
}

inline void check_derivative_args(const Grid& g, int axis, int order) {
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("derivative axis out of range");
  if (order != 1 && order != 2) throw InvalidArgument("derivative order must be 1 or 2");
}

inline Spectrum differentiate(Spectrum s, int axis, int order) {
  check_derivative_args(s.grid(), axis, order);
  const Grid g = s.grid();
  s.apply([&](const Index3& j) { return derivative_symbol(g, j, axis, order); });
  return s;
}

inline ComplexField derivative(const ComplexField& f, int axis, int order) {
  return inverse(differentiate(forward(f), axis, order));
}
inline ScalarField derivative(const ScalarField& f, int axis, int order) {
  return inverse_real(differentiate(forward(f), axis, order));
}

template <class T>
Field<T> laplacian(const Field<T>& f) {
  Spectrum s = forward(f);
  const Grid& g = f.grid();
  s.apply([&](const Index3& j) { return Complex(-wavenumber_squared(g, j), 0.0); });
  if constexpr (std::is_same_v<T, double>)
    return inverse_real(std::move(s));
  else
    return inverse(std::move(s));
}

template <class T>
std::vector<Field<T>> gradient(const Field<T>& f) {
  const Spectrum s = forward(f);
  std::vector<Field<T>> out;
  out.reserve(static_cast<std::size_t>(f.grid().dim()));
  for (int d = 0; d < f.grid().dim(); ++d) {
    if constexpr (std::is_same_v<T, double>)
      out.push_back(inverse_real(differentiate(s, d, 1)));
    else
      out.push_back(inverse(differentiate(s, d, 1)));
  }
  return out;
}

/// Spectrum of sum_k d_k v_k.
template <class T>
Spectrum divergence_spectrum(std::span<const Field<T>> v) {
  if (v.empty()) throw InvalidArgument("divergence of an empty field list");
  const Grid& g = v.front().grid();
  if (static_cast<int>(v.size()) != g.dim()) throw InvalidArgument("divergence needs one component per axis");
  Spectrum acc(g);
  for (int d = 0; d < g.dim(); ++d) acc += differentiate(forward(v[static_cast<std::size_t>(d)]), d, 1);
  return acc;
}

template <class T>
Field<T> divergence(std::span<const Field<T>> v) {
  if constexpr (std::is_same_v<T, double>)
    return inverse_real(divergence_spectrum(v));
  else
    return inverse(divergence_spectrum(v));
}
template <class T>
Field<T> divergence(const std::vector<Field<T>>& v) {
  return divergence(std::span<const Field<T>>(v));
}

/// Mean-zero solution of -div(grad(u)) = s - mean(s), applied in place to a spectrum.
inline Spectrum solve_neg_laplacian(Spectrum s) {
  const Grid g = s.grid();
  s.apply([&](const Index3& j) {
    const double k2 = div_grad_symbol(g, j);
    return k2 > 0.0 ? Complex(1.0 / k2, 0.0) : Complex(0.0, 0.0);
  });
  return s;
}

template <class T>
Field<T> inverse_neg_laplacian(const Field<T>& f) {
  if constexpr (std::is_same_v<T, double>)
    return inverse_real(solve_neg_laplacian(forward(f)));
  else
    return inverse(solve_neg_laplacian(forward(f)));
}

/// Componentwise spectral Laplacian of a 3-vector field.
inline VectorField laplacian(const VectorField& v) {
  return from_components(laplacian(component(v, 0)), laplacian(component(v, 1)), laplacian(component(v, 2)));
}

/// d_axis of every component of a 3-vector field.
inline VectorField derivative(const VectorField& v, int axis, int order) {
  return from_components(derivative(component(v, 0), axis, order), derivative(component(v, 1), axis, order),
                         derivative(component(v, 2), axis, order));
}

inline std::vector<VectorField> gradient(const VectorField& v) {
  std::vector<VectorField> out;
  for (int d = 0; d < v.grid().dim(); ++d) out.push_back(derivative(v, d, 1));
  return out;
}

} // namespace llglab
