#include "sepbic/dense.hpp"

#include <lapacke.h>

#include <string>

#include "sepbic/errors.hpp"

namespace sepbic {

DenseSpectrum dense_diagonalize_sum(const TridiagonalOperator& hx, const TridiagonalOperator& hy,
                                    const std::vector<double>& extra, std::size_t vectors_from,
                                    std::size_t vectors_to, std::size_t cap) {
  hx.validate();
  hy.validate();
  const std::size_t nx = hx.size(), ny = hy.size();
  const std::size_t n = nx * ny;
  if (n > cap)
    throw ValidationError("dense 2D oracle refuses " + std::to_string(n) + " points (cap " + std::to_string(cap) + ")");
  if (!extra.empty() && extra.size() != n) throw ValidationError("extra potential does not match the 2D grid");
  if (vectors_to > n || vectors_from > vectors_to) throw ValidationError("eigenvector index window out of range");

  // Column-major n x n, upper triangle filled (symmetric, so layout is moot).
  std::vector<double> a(n * n, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[c * n + r]; };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t p = j * nx + i;
      at(p, p) = hx.diagonal[i] + hy.diagonal[j] + (extra.empty() ? 0.0 : extra[p]);
      if (i + 1 < nx) at(p, p + 1) = at(p + 1, p) = hx.off_diagonal[i];
      if (j + 1 < ny) at(p, p + nx) = at(p + nx, p) = hy.off_diagonal[j];
    }
  }

  DenseSpectrum out;
  out.values.resize(n);
  const auto ln = static_cast<lapack_int>(n);
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * n);
  const bool want = vectors_to > vectors_from;
  std::vector<double> z;
  if (!want) {
    std::vector<double> work = a;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'A', 'U', ln, work.data(), ln, 0.0, 0.0, 0, 0, 0.0,
                                           &found, out.values.data(), nullptr, 1, support.data());
    if (info != 0) throw NumericalError("dsyevr failed with info " + std::to_string(info));
    return out;
  }
  // All eigenvalues, then vectors on the requested index window.
  {
    std::vector<double> work = a;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'A', 'U', ln, work.data(), ln, 0.0, 0.0, 0, 0, 0.0,
                                           &found, out.values.data(), nullptr, 1, support.data());
    if (info != 0) throw NumericalError("dsyevr failed with info " + std::to_string(info));
  }
  const std::size_t m = vectors_to - vectors_from;
  z.resize(n * m);
  std::vector<double> w(n);
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', ln, a.data(), ln, 0.0, 0.0, static_cast<lapack_int>(vectors_from + 1),
                     static_cast<lapack_int>(vectors_to), 0.0, &found, w.data(), z.data(), ln, support.data());
  if (info != 0) throw NumericalError("dsyevr (vectors) failed with info " + std::to_string(info));
  out.vector_first_index = vectors_from;
  out.vectors.resize(static_cast<std::size_t>(found));
  for (std::size_t k = 0; k < static_cast<std::size_t>(found); ++k)
    out.vectors[k].assign(z.begin() + static_cast<std::ptrdiff_t>(k * n),
                          z.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
  return out;
}

DenseSpectrum dense_diagonalize_2d(const RealField2D& potential, KineticConvention convention,
                                   std::size_t vectors_from, std::size_t vectors_to, std::size_t cap) {
  const std::vector<double> zx(potential.nx(), 0.0), zy(potential.ny(), 0.0);
  if (potential.nx() * potential.ny() > cap)
    throw ValidationError("dense 2D oracle refuses " + std::to_string(potential.nx() * potential.ny()) +
                          " points (cap " + std::to_string(cap) + ")");
  const auto hx = build_hamiltonian(potential.grid_x(), zx, convention);
  const auto hy = build_hamiltonian(potential.grid_y(), zy, convention);
  return dense_diagonalize_sum(hx, hy, potential.data(), vectors_from, vectors_to, cap);
}

}  // namespace sepbic
