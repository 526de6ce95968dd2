#pragma once

#include <span>

#include "sepbic/grid.hpp"

namespace sepbic {

/// Trapezoidal rule on a uniform grid; exact for piecewise-linear integrands.
double integrate(const Grid1D& grid, std::span<const double> values);

/// Trapezoidal integral of a * f * b (the 1D matrix element <a|f|b>).
double integrate_product(const Grid1D& grid, std::span<const double> a, std::span<const double> f,
                         std::span<const double> b);

/// Trapezoidal integral of a * b.
double integrate_product(const Grid1D& grid, std::span<const double> a, std::span<const double> b);

}  // namespace sepbic
