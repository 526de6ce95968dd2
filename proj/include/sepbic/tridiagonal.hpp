#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace sepbic {

/// Real symmetric tridiagonal matrix. `weight` is the quadrature weight of the
/// inner product the eigenvectors are normalized in (grid spacing h for
/// finite-difference operators, 1 for plain matrices).
struct TridiagonalOperator {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;
  double weight = 1.0;

  std::size_t size() const noexcept { return diagonal.size(); }
  /// Infinity norm.
  double norm() const noexcept;
  void validate() const;
  /// y = T x
  std::vector<double> apply(const std::vector<double>& x) const;
};

struct EigenSelection {
  enum class Kind { all, lowest, interval };
  Kind kind = Kind::all;
  std::size_t count = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static EigenSelection all() { return {}; }
  static EigenSelection lowest(std::size_t k) { return {Kind::lowest, k}; }
  /// Eigenvalues in the open interval (lo, hi).
  static EigenSelection interval(double lo, double hi) { return {Kind::interval, 0, lo, hi}; }
};

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;  // empty when vectors were not requested
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t count_below(const TridiagonalOperator& op, double x);

/// Selected eigenpairs in ascending order. Eigenvectors satisfy
/// weight * sum(u_i v_i) = delta_uv, with the sign fixed so the first component
/// above 1e-3 of the peak magnitude is positive. Exactly degenerate values (only
/// possible when the matrix splits) are ordered by the index of that component.
std::vector<EigenPair> eig_tridiagonal(const TridiagonalOperator& op, EigenSelection selection,
                                       bool want_vectors = true);

std::vector<double> eigenvalues(const TridiagonalOperator& op, EigenSelection selection);

}  // namespace sepbic
