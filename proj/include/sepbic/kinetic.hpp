#pragma once

#include <span>
#include <string>

#include "sepbic/grid.hpp"
#include "sepbic/tridiagonal.hpp"

namespace sepbic {

/// Kinetic term -c d^2/dx^2. "reduced": c = 1. "half": c = 1/(2m).
struct KineticConvention {
  enum class Kind { reduced, half };
  Kind kind = Kind::reduced;
  double mass = 1.0;

  static KineticConvention reduced() { return {}; }
  static KineticConvention half(double mass = 1.0) { return {Kind::half, mass}; }
  /// Arbitrary prefactor, expressed as the half convention with m = 1/(2c).
  static KineticConvention with_coefficient(double c) { return {Kind::half, 0.5 / c}; }

  double coefficient() const noexcept { return kind == Kind::reduced ? 1.0 : 0.5 / mass; }
  std::string name() const;
  bool operator==(const KineticConvention&) const = default;
};

KineticConvention parse_convention(const std::string& text);

/// 3-point finite-difference Hamiltonian -c D2 + V with zero Dirichlet data
/// outside the grid; weight = h so eigenvectors are grid-normalized.
TridiagonalOperator build_hamiltonian(const Grid1D& grid, std::span<const double> potential,
                                      KineticConvention convention);

}  // namespace sepbic
