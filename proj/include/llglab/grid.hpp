#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "errors.hpp"

namespace llglab {

using Index3 = std::array<int, 3>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Forward/backward in-place complex plans for one grid shape.
class FftPlans {
public:
  FftPlans(int dim, int n) {
    std::array<int, 3> dims{n, n, n};
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(n);
    std::lock_guard lock(fftw_planner_mutex());
    auto* buf = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(dim, dims.data(), buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(dim, dims.data(), buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
  }
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void forward(std::span<std::complex<double>> data) const {
    fftw_execute_dft(forward_, as_fftw(data), as_fftw(data));
  }
  void backward(std::span<std::complex<double>> data) const {
    fftw_execute_dft(backward_, as_fftw(data), as_fftw(data));
  }

private:
  static fftw_complex* as_fftw(std::span<std::complex<double>> d) {
    return reinterpret_cast<fftw_complex*>(d.data());
  }
  fftw_plan forward_{};
  fftw_plan backward_{};
};

} // namespace detail

/// Uniform periodic grid on the torus [0, L)^dim with N points per axis.
///
/// Spectral index j in [0, N) corresponds to the integer mode m_j = j for
/// j < N/2 and j - N otherwise, so the Nyquist mode sits at j = N/2 with
/// m = -N/2. Copies share the transform plans.
class Grid {
public:
  int dim() const noexcept { return dim_; }
  int points_per_axis() const noexcept { return n_; }
  double box_length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / n_; }
  double cell_volume() const noexcept { return std::pow(spacing(), dim_); }
  std::size_t size() const noexcept { return size_; }

  /// Integer mode number of spectral index j.
  int mode(int j) const noexcept { return j < n_ / 2 ? j : j - n_; }
  /// Wavenumber 2*pi*m_j/L of spectral index j.
  double wavenumber(int j) const noexcept { return wavenumbers_[static_cast<std::size_t>(j)]; }
  std::span<const double> wavenumbers() const noexcept { return wavenumbers_; }
  /// First-derivative wavenumber: as wavenumber() but zero at the Nyquist index.
  double odd_wavenumber(int j) const noexcept { return j == n_ / 2 ? 0.0 : wavenumber(j); }
  double max_wavenumber() const noexcept { return std::numbers::pi * n_ / length_; }

  Index3 coords(std::size_t flat) const noexcept {
    Index3 c{0, 0, 0};
    for (int d = dim_ - 1; d >= 0; --d) {
      c[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(n_));
      flat /= static_cast<std::size_t>(n_);
    }
    return c;
  }
  std::size_t flat(const Index3& c) const noexcept {
    std::size_t f = 0;
    for (int d = 0; d < dim_; ++d) f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c[static_cast<std::size_t>(d)]);
    return f;
  }
  /// Physical coordinates of a grid point (unused axes are 0).
  std::array<double, 3> position(std::size_t flat_index) const noexcept {
    const auto c = coords(flat_index);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) x[static_cast<std::size_t>(d)] = c[static_cast<std::size_t>(d)] * spacing();
    return x;
  }
  /// Signed minimal-image offset b - a along one axis, in [-N/2, N/2).
  int wrapped_offset(int a, int b) const noexcept {
    int d = ((b - a) % n_ + n_) % n_;
    return d >= n_ / 2 ? d - n_ : d;
  }

  const detail::FftPlans& plans() const noexcept { return *plans_; }

  bool operator==(const Grid& o) const noexcept {
    return dim_ == o.dim_ && n_ == o.n_ && length_ == o.length_;
  }

  friend Grid make_grid(int dim, int n, double length);

private:
  Grid(int dim, int n, double length) : dim_(dim), n_(n), length_(length) {
    size_ = 1;
    for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(n);
    wavenumbers_.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      wavenumbers_[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * mode(j) / length;
    plans_ = std::make_shared<const detail::FftPlans>(dim, n);
  }

  int dim_;
  int n_;
  double length_;
  std::size_t size_{};
  std::vector<double> wavenumbers_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

inline Grid make_grid(int dim, int n, double length) {
  if (dim < 1 || dim > 3) throw InvalidArgument("grid dimension must be 1, 2 or 3");
  if (n < 8 || (n & (n - 1)) != 0) throw InvalidArgument("points per axis must be a power of two >= 8");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("box length must be positive");
  return Grid(dim, n, length);
}

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw InvalidArgument("fields live on different grids");
}

} // namespace llglab
