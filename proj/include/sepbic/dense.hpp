#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sepbic/grid.hpp"
#include "sepbic/kinetic.hpp"
#include "sepbic/tridiagonal.hpp"

namespace sepbic {

/// Default cap on the number of 2D grid points the dense oracle will accept.
inline constexpr std::size_t kDenseDefaultCap = 4096;

struct DenseSpectrum {
  std::vector<double> values;  // ascending, full spectrum
  /// Eigenvectors for the requested index window, x index fastest, unit 2-norm.
  std::vector<std::vector<double>> vectors;
  std::size_t vector_first_index = 0;
};

/// Dense diagonalization of hx (x) I + I (x) hy + diag(extra). `extra` is indexed
/// j * nx + i and may be empty. Vectors are computed for eigenvalue indices
/// [vectors_from, vectors_to) when that range is non-empty.
DenseSpectrum dense_diagonalize_sum(const TridiagonalOperator& hx, const TridiagonalOperator& hy,
                                    const std::vector<double>& extra, std::size_t vectors_from = 0,
                                    std::size_t vectors_to = 0, std::size_t cap = kDenseDefaultCap);

/// Full spectrum of the 2D finite-difference Hamiltonian -c*Laplacian + V(x,y)
/// with Dirichlet walls beyond the grid, built the same way as the 1D operators.
DenseSpectrum dense_diagonalize_2d(const RealField2D& potential, KineticConvention convention,
                                   std::size_t vectors_from = 0, std::size_t vectors_to = 0,
                                   std::size_t cap = kDenseDefaultCap);

}  // namespace sepbic
