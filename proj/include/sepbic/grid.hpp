#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "sepbic/errors.hpp"

namespace sepbic {

/// Uniform grid including both end points.
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double x_min, double x_max, std::size_t n_points);

  /// Grid symmetric about 0 with spacing as close to `spacing` as an odd point count allows.
  static Grid1D symmetric(double half_extent, double spacing);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double operator[](std::size_t i) const noexcept {
    return i + 1 == n_ ? x_max_ : x_min_ + static_cast<double>(i) * h_;
  }
  std::vector<double> points() const;

  /// x_min == -x_max (to round-off); enables mirror-parity analysis.
  bool is_symmetric() const noexcept;
  /// Index of the mirror image of node i on a symmetric grid.
  std::size_t mirror(std::size_t i) const noexcept { return n_ - 1 - i; }
  /// Nearest node to x (clamped).
  std::size_t nearest(double x) const noexcept;

  bool same_as(const Grid1D& o) const noexcept {
    return n_ == o.n_ && std::abs(x_min_ - o.x_min_) <= 1e-12 * (1 + std::abs(x_min_)) &&
           std::abs(x_max_ - o.x_max_) <= 1e-12 * (1 + std::abs(x_max_));
  }

 private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  std::size_t n_ = 0;
  double h_ = 0.0;
};

/// Field on a tensor product grid, x index fastest: value(i, j) = data[j * nx + i].
template <typename T>
class Field2D {
 public:
  Field2D() = default;
  Field2D(Grid1D gx, Grid1D gy, T fill = T{})
      : gx_(std::move(gx)), gy_(std::move(gy)), data_(gx_.size() * gy_.size(), fill) {}

  const Grid1D& grid_x() const noexcept { return gx_; }
  const Grid1D& grid_y() const noexcept { return gy_; }
  std::size_t nx() const noexcept { return gx_.size(); }
  std::size_t ny() const noexcept { return gy_.size(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * gx_.size() + i]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * gx_.size() + i]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

 private:
  Grid1D gx_;
  Grid1D gy_;
  std::vector<T> data_;
};

using RealField2D = Field2D<double>;
using ComplexField2D = Field2D<std::complex<double>>;

/// Linear interpolation of samples on `from` onto the nodes of `to`; zero outside.
std::vector<double> interpolate(const Grid1D& from, const std::vector<double>& values, const Grid1D& to);

}  // namespace sepbic
