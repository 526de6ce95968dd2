// Grids, tridiagonal eigensolver, quadrature and the dense 2D oracle.
// Eigen's dense solvers serve as the independent reference for the
// hand-written tridiagonal routines.

#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sepbic/dense.hpp"
#include "sepbic/eigen1d.hpp"
#include "sepbic/kinetic.hpp"
#include "sepbic/quadrature.hpp"
#include "sepbic/tridiagonal.hpp"

using namespace sepbic;

namespace {

Eigen::VectorXd reference_eigenvalues(const TridiagonalOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = op.diagonal[i];
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = op.off_diagonal[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

TridiagonalOperator random_tridiagonal(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TridiagonalOperator op;
  op.diagonal.resize(n);
  op.off_diagonal.resize(n - 1);
  for (auto& d : op.diagonal) d = u(rng);
  for (auto& e : op.off_diagonal) e = u(rng);
  return op;
}

double max_orthonormality_error(const std::vector<EigenPair>& pairs, double weight) {
  double err = 0.0;
  for (std::size_t a = 0; a < pairs.size(); ++a)
    for (std::size_t b = a; b < pairs.size(); ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < pairs[a].vector.size(); ++i) dot += pairs[a].vector[i] * pairs[b].vector[i];
      err = std::max(err, std::abs(weight * dot - (a == b ? 1.0 : 0.0)));
    }
  return err;
}

}  // namespace

TEST_CASE("grid construction and symmetry") {
  Grid1D g(-2.0, 2.0, 5);
  CHECK(g.spacing() == doctest::Approx(1.0));
  CHECK(g.is_symmetric());
  CHECK(g.mirror(0) == 4);
  CHECK(g[4] == 2.0);
  CHECK(g.nearest(0.4) == 2);
  CHECK_FALSE(Grid1D(0.0, 1.0, 11).is_symmetric());
  CHECK_THROWS_AS(Grid1D(0.0, 1.0, 2), ValidationError);
  CHECK_THROWS_AS(Grid1D(1.0, 1.0, 3), ValidationError);

  const auto s = Grid1D::symmetric(10.0, 0.3);
  CHECK(s.is_symmetric());
  CHECK(s.size() % 2 == 1);
  CHECK(std::abs(s.spacing() - 0.3) < 0.01);
}

TEST_CASE("linear interpolation between grids") {
  Grid1D a(0.0, 1.0, 3);
  Grid1D b(-0.5, 1.5, 9);
  const auto out = interpolate(a, {0.0, 1.0, 4.0}, b);
  CHECK(out[0] == 0.0);
  CHECK(out[3] == doctest::Approx(0.5));
  CHECK(out[5] == doctest::Approx(2.5));
  CHECK(out[8] == 0.0);
}

TEST_CASE("trapezoid quadrature") {
  for (std::size_t n : {3u, 10u, 101u}) {
    Grid1D g(0.0, 1.0, n);
    std::vector<double> one(n, 1.0);
    CHECK(integrate(g, one) == doctest::Approx(1.0).epsilon(1e-14));
  }
  Grid1D g(-3.0, 3.0, 301);
  std::vector<double> odd(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) odd[i] = g[i] * std::exp(-g[i] * g[i]) + std::pow(g[i], 3);
  CHECK(std::abs(integrate(g, odd)) < 1e-13);

  Grid1D w(-10.0, 10.0, 2001);
  std::vector<double> gauss(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) gauss[i] = std::exp(-w[i] * w[i]);
  CHECK(std::abs(integrate(w, gauss) - std::sqrt(std::numbers::pi)) < 1e-8);

  // Exact for piecewise-linear integrands.
  Grid1D p(0.0, 2.0, 5);
  CHECK(integrate(p, std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("tridiagonal: small analytic cases") {
  TridiagonalOperator zero{{0, 0, 0}, {0, 0}};
  const auto z = eig_tridiagonal(zero, EigenSelection::all());
  REQUIRE(z.size() == 3);
  for (const auto& p : z) CHECK(p.value == 0.0);
  // Split into 1x1 blocks: unit vectors ordered by their leading index.
  CHECK(z[0].vector[0] == doctest::Approx(1.0));
  CHECK(z[1].vector[1] == doctest::Approx(1.0));
  CHECK(z[2].vector[2] == doctest::Approx(1.0));

  TridiagonalOperator two{{2, 2}, {-1}};
  const auto t = eig_tridiagonal(two, EigenSelection::all());
  REQUIRE(t.size() == 2);
  CHECK(t[0].value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(t[1].value == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(t[0].vector[0] > 0.0);
  CHECK(t[1].vector[0] > 0.0);
  CHECK(t[1].vector[1] < 0.0);
}

TEST_CASE("tridiagonal: random matrices against a dense reference") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto op = random_tridiagonal(120, seed);
    const auto ref = reference_eigenvalues(op);
    const auto pairs = eig_tridiagonal(op, EigenSelection::all());
    REQUIRE(pairs.size() == op.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      CHECK(std::abs(pairs[k].value - ref[static_cast<Eigen::Index>(k)]) < 1e-12);
      if (k) CHECK(pairs[k].value >= pairs[k - 1].value);
      const auto hv = op.apply(pairs[k].vector);
      double r = 0.0;
      for (std::size_t i = 0; i < hv.size(); ++i) r = std::max(r, std::abs(hv[i] - pairs[k].value * pairs[k].vector[i]));
      CHECK(r <= 1e-10 * op.norm());
    }
    CHECK(max_orthonormality_error(pairs, 1.0) <= 1e-10);
    // Sturm count agrees with the reference.
    CHECK(count_below(op, 0.0) == static_cast<std::size_t>(std::count_if(
                                      ref.begin(), ref.end(), [](double v) { return v < 0.0; })));
  }
}

TEST_CASE("tridiagonal: selections") {
  const auto op = random_tridiagonal(60, 7);
  const auto ref = reference_eigenvalues(op);
  const auto low = eigenvalues(op, EigenSelection::lowest(5));
  REQUIRE(low.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(low[k] == doctest::Approx(ref[static_cast<Eigen::Index>(k)]).epsilon(1e-12));
  const auto mid = eigenvalues(op, EigenSelection::interval(-0.5, 0.5));
  const auto expected =
      std::count_if(ref.begin(), ref.end(), [](double v) { return v > -0.5 && v < 0.5; });
  CHECK(mid.size() == static_cast<std::size_t>(expected));
}

TEST_CASE("tridiagonal: near-degenerate clusters stay orthonormal") {
  // Two weakly coupled identical blocks give pairs split by ~1e-14.
  TridiagonalOperator op;
  const std::size_t half = 40;
  for (std::size_t i = 0; i < 2 * half; ++i) op.diagonal.push_back(2.0);
  for (std::size_t i = 0; i + 1 < 2 * half; ++i) op.off_diagonal.push_back(i + 1 == half ? 1e-14 : -1.0);
  const auto pairs = eig_tridiagonal(op, EigenSelection::all());
  CHECK(max_orthonormality_error(pairs, 1.0) <= 1e-10);
}

TEST_CASE("finite-difference harmonic oscillator") {
  // -1/2 d2 + x^2/2 on a fine grid: (n + 1/2) ladder. The 3-point error is
  // about h^2 <p^4> / 24, which grows like n^2.
  const Grid1D g(-8.0, 8.0, 2001);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = 0.5 * g[i] * g[i];
  const auto op = build_hamiltonian(g, v, KineticConvention::half(1.0));
  const auto pairs = eig_tridiagonal(op, EigenSelection::lowest(4));
  for (std::size_t n = 0; n < pairs.size(); ++n) CHECK(std::abs(pairs[n].value - (n + 0.5)) < 1e-4);
  CHECK(max_orthonormality_error(pairs, g.spacing()) <= 1e-10);

  // Reduced convention: -d2 + x^2 gives 2n + 1.
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = g[i] * g[i];
  const auto red = eigenvalues(build_hamiltonian(g, w, KineticConvention::reduced()), EigenSelection::lowest(4));
  for (std::size_t n = 0; n < red.size(); ++n) CHECK(std::abs(red[n] - (2.0 * n + 1.0)) < 2e-4);

  // 200 points across +-4.5 oscillator lengths of a soft well (omega = 0.1).
  const double omega = 0.1;
  const double len = 1.0 / std::sqrt(omega);
  const Grid1D c(-4.5 * len, 4.5 * len, 200);
  std::vector<double> vc(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) vc[i] = 0.5 * omega * omega * c[i] * c[i];
  const auto e200 = eigenvalues(build_hamiltonian(c, vc, KineticConvention::half(1.0)), EigenSelection::lowest(3));
  for (std::size_t n = 0; n < e200.size(); ++n) CHECK(std::abs(e200[n] - omega * (n + 0.5)) < 1e-4);
}

TEST_CASE("kinetic conventions") {
  CHECK(KineticConvention::reduced().coefficient() == 1.0);
  CHECK(KineticConvention::half(2.0).coefficient() == 0.25);
  CHECK(KineticConvention::with_coefficient(0.3).coefficient() == doctest::Approx(0.3));
  CHECK(parse_convention("reduced") == KineticConvention::reduced());
  CHECK(parse_convention("half") == KineticConvention::half(1.0));
  CHECK_THROWS_AS(parse_convention("hbar"), ValidationError);
}

TEST_CASE("dense oracle: zero potential on 8x8 is the pairwise sum ladder") {
  const Grid1D g(0.0, 1.0, 8);
  RealField2D zero(g, g);
  const auto dense = dense_diagonalize_2d(zero, KineticConvention::reduced());
  const auto e1 = eigenvalues(build_hamiltonian(g, std::vector<double>(8, 0.0), KineticConvention::reduced()),
                              EigenSelection::all());
  std::vector<double> sums;
  for (double a : e1)
    for (double b : e1) sums.push_back(a + b);
  std::sort(sums.begin(), sums.end());
  REQUIRE(dense.values.size() == sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) CHECK(std::abs(dense.values[k] - sums[k]) <= 1e-10 * (1 + std::abs(sums[k])));
}

TEST_CASE("dense oracle: separable potential on 32x32 equals the tensor sum") {
  const Grid1D gx(-6.0, 6.0, 32), gy(-5.0, 5.0, 32);
  std::vector<double> vx(32), vy(32);
  for (std::size_t i = 0; i < 32; ++i) {
    vx[i] = -1.4 * std::exp(-2.0 * gx[i] * gx[i] / 4.0);
    vy[i] = 0.3 * gy[i] - 2.0 * std::exp(-gy[i] * gy[i]);
  }
  RealField2D v(gx, gy);
  for (std::size_t j = 0; j < 32; ++j)
    for (std::size_t i = 0; i < 32; ++i) v(i, j) = vx[i] + vy[j];
  const auto conv = KineticConvention::reduced();
  const auto dense = dense_diagonalize_2d(v, conv);
  const auto ex = eigenvalues(build_hamiltonian(gx, vx, conv), EigenSelection::all());
  const auto ey = eigenvalues(build_hamiltonian(gy, vy, conv), EigenSelection::all());
  std::vector<double> sums;
  for (double a : ex)
    for (double b : ey) sums.push_back(a + b);
  std::sort(sums.begin(), sums.end());
  REQUIRE(dense.values.size() == sums.size());
  double err = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) err = std::max(err, std::abs(dense.values[k] - sums[k]));
  CHECK(err <= 1e-10 * (1.0 + std::abs(sums.back())));
}

TEST_CASE("dense oracle: non-separable bump is detected") {
  const Grid1D g(-3.0, 3.0, 16);
  RealField2D v(g, g);
  for (std::size_t j = 0; j < 16; ++j)
    for (std::size_t i = 0; i < 16; ++i) v(i, j) = g[i] * g[j] * std::exp(-(g[i] * g[i] + g[j] * g[j]) / 2.0);
  const auto dense = dense_diagonalize_2d(v, KineticConvention::reduced());
  // Tensor sum of the axis marginals (the potential restricted to each axis is zero).
  const auto e1 = eigenvalues(build_hamiltonian(g, std::vector<double>(16, 0.0), KineticConvention::reduced()),
                              EigenSelection::all());
  std::vector<double> sums;
  for (double a : e1)
    for (double b : e1) sums.push_back(a + b);
  std::sort(sums.begin(), sums.end());
  double diff = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) diff = std::max(diff, std::abs(dense.values[k] - sums[k]));
  CHECK(diff > 1e-3);
}

TEST_CASE("dense oracle: size cap") {
  const Grid1D g(0.0, 1.0, 65);
  RealField2D v(g, g);
  CHECK_THROWS_AS(dense_diagonalize_2d(v, KineticConvention::reduced()), ValidationError);
}
