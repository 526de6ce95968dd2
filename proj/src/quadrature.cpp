#include "sepbic/quadrature.hpp"

#include <string>

namespace sepbic {
namespace {

void check(const Grid1D& grid, std::size_t n) {
  if (n != grid.size())
    throw ValidationError("quadrature: " + std::to_string(n) + " samples on a " + std::to_string(grid.size()) +
                          "-point grid");
}

}  // namespace

double integrate(const Grid1D& grid, std::span<const double> values) {
  check(grid, values.size());
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * grid.spacing();
}

double integrate_product(const Grid1D& grid, std::span<const double> a, std::span<const double> f,
                         std::span<const double> b) {
  check(grid, a.size());
  check(grid, f.size());
  check(grid, b.size());
  const std::size_t n = a.size();
  double s = 0.5 * (a[0] * f[0] * b[0] + a[n - 1] * f[n - 1] * b[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += a[i] * f[i] * b[i];
  return s * grid.spacing();
}

double integrate_product(const Grid1D& grid, std::span<const double> a, std::span<const double> b) {
  check(grid, a.size());
  check(grid, b.size());
  const std::size_t n = a.size();
  double s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += a[i] * b[i];
  return s * grid.spacing();
}

}  // namespace sepbic
