#include "sepbic/kinetic.hpp"

#include <cstdio>

#include "sepbic/errors.hpp"

namespace sepbic {

std::string KineticConvention::name() const {
  if (kind == Kind::reduced) return "reduced";
  if (mass == 1.0) return "half";
  char buf[64];
  std::snprintf(buf, sizeof buf, "half(m=%.17g)", mass);
  return buf;
}

KineticConvention parse_convention(const std::string& text) {
  if (text == "reduced") return KineticConvention::reduced();
  if (text == "half") return KineticConvention::half();
  throw ValidationError("unknown kinetic convention '" + text + "' (expected reduced or half)");
}

TridiagonalOperator build_hamiltonian(const Grid1D& grid, std::span<const double> potential,
                                      KineticConvention convention) {
  if (potential.size() != grid.size()) throw ValidationError("potential samples do not match grid");
  if (convention.kind == KineticConvention::Kind::half && !(convention.mass > 0.0))
    throw ValidationError("kinetic mass must be positive");
  const double h = grid.spacing();
  const double t = convention.coefficient() / (h * h);
  TridiagonalOperator op;
  op.diagonal.resize(grid.size());
  op.off_diagonal.assign(grid.size() - 1, -t);
  for (std::size_t i = 0; i < grid.size(); ++i) op.diagonal[i] = 2.0 * t + potential[i];
  op.weight = h;
  return op;
}

}  // namespace sepbic
