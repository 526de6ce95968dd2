#include "sepbic/grid.hpp"

#include <algorithm>
#include <string>

namespace sepbic {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points) {
  if (n_points < 3) throw ValidationError("Grid1D needs at least 3 points, got " + std::to_string(n_points));
  if (!(x_max > x_min)) throw ValidationError("Grid1D needs x_max > x_min");
  h_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw ValidationError("Grid1D spacing must be positive and finite");
}

Grid1D Grid1D::symmetric(double half_extent, double spacing) {
  if (!(half_extent > 0.0) || !(spacing > 0.0)) throw ValidationError("symmetric grid needs positive extent and spacing");
  auto half_cells = static_cast<std::size_t>(std::llround(half_extent / spacing));
  half_cells = std::max<std::size_t>(half_cells, 1);
  return Grid1D(-half_extent, half_extent, 2 * half_cells + 1);
}

std::vector<double> Grid1D::points() const {
  std::vector<double> p(n_);
  for (std::size_t i = 0; i < n_; ++i) p[i] = (*this)[i];
  return p;
}

bool Grid1D::is_symmetric() const noexcept {
  return std::abs(x_min_ + x_max_) <= 1e-12 * std::max(std::abs(x_min_), std::abs(x_max_));
}

std::size_t Grid1D::nearest(double x) const noexcept {
  const double t = std::round((x - x_min_) / h_);
  if (t <= 0) return 0;
  if (t >= static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<std::size_t>(t);
}

std::vector<double> interpolate(const Grid1D& from, const std::vector<double>& values, const Grid1D& to) {
  if (values.size() != from.size()) throw ValidationError("interpolate: sample count does not match grid");
  std::vector<double> out(to.size(), 0.0);
  if (from.same_as(to)) return values;
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double x = to[i];
    if (x < from.x_min() || x > from.x_max()) continue;
    const double t = (x - from.x_min()) / from.spacing();
    auto k = static_cast<std::size_t>(std::floor(t));
    if (k >= from.size() - 1) k = from.size() - 2;
    const double w = t - static_cast<double>(k);
    out[i] = (1.0 - w) * values[k] + w * values[k + 1];
  }
  return out;
}

}  // namespace sepbic
