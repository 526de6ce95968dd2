// Split-step propagation, absorber, flux detectors and decay fits.

#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "sepbic/eigen1d.hpp"
#include "sepbic/tdse2d.hpp"

using namespace sepbic;

namespace {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

const Complex I{0.0, 1.0};

PropagationSetup small_setup(double half_x, double half_y, double h) {
  PropagationSetup s;
  s.grid_x = Grid1D::symmetric(half_x, h);
  s.grid_y = Grid1D::symmetric(half_y, h);
  s.convention = KineticConvention::reduced();
  s.potential_x = Potential1D::gaussian_well(1.4, 2.0).sample(s.grid_x);
  s.potential_y = Potential1D::gaussian_well(2.2, 1.5).sample(s.grid_y);
  s.dt = 0.05;
  s.absorber.enabled = false;
  s.detector_x = 0.7 * half_x;
  s.detector_y = 0.7 * half_y;
  return s;
}

RealField2D bump_field(const Grid1D& gx, const Grid1D& gy) {
  RealField2D f(gx, gy);
  for (std::size_t j = 0; j < gy.size(); ++j)
    for (std::size_t i = 0; i < gx.size(); ++i)
      f(i, j) = 0.7 * std::exp(-std::pow(gx[i] - 0.8, 2) - std::pow(gy[j] + 0.5, 2) / 2.0);
  return f;
}

ComplexField2D packet(const Grid1D& gx, const Grid1D& gy, double x0, double y0, double kx, double ky, double w) {
  ComplexField2D psi(gx, gy);
  for (std::size_t j = 0; j < gy.size(); ++j)
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double dx = gx[i] - x0, dy = gy[j] - y0;
      psi(i, j) = std::exp(-(dx * dx + dy * dy) / (2 * w * w)) * std::exp(I * (kx * gx[i] + ky * gy[j]));
    }
  const double n = grid_norm(psi);
  for (auto& v : psi.data()) v /= std::sqrt(n);
  return psi;
}

// Dense per-axis operators of the split scheme, flattened with x fastest.
CMat axis_operator(const PropagationSetup& s, bool x_axis, double strength) {
  const std::size_t nx = s.grid_x.size(), ny = s.grid_y.size(), n = nx * ny;
  const double c = s.convention.coefficient();
  const double h = x_axis ? s.grid_x.spacing() : s.grid_y.spacing();
  CMat a = CMat::Zero(n, n);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = j * nx + i;
      double v = 2 * c / (h * h) + (x_axis ? s.potential_x[i] : s.potential_y[j]);
      if (s.perturbation.nx() != 0) v += 0.5 * strength * s.perturbation(i, j);
      a(k, k) = v;
      if (x_axis && i + 1 < nx) a(k, k + 1) = a(k + 1, k) = -c / (h * h);
      if (!x_axis && j + 1 < ny) a(k, k + nx) = a(k + nx, k) = -c / (h * h);
    }
  return a;
}

CMat cayley(const CMat& a, double tau) {
  const CMat id = CMat::Identity(a.rows(), a.cols());
  return (id + I * (tau / 2) * a).partialPivLu().solve(id - I * (tau / 2) * a);
}

CVec flatten(const ComplexField2D& f) {
  CVec v(static_cast<Eigen::Index>(f.data().size()));
  for (std::size_t k = 0; k < f.data().size(); ++k) v[static_cast<Eigen::Index>(k)] = f.data()[k];
  return v;
}

// Reflection oracle: dense solve of the layer with an incoming-wave boundary
// condition psi_{-1} = e^{-ikh} + (psi_0 - 1) e^{ikh}.
double reflection_oracle(double h, double width, double strength, double k) {
  const auto m = static_cast<std::size_t>(std::floor(width / h + 1e-9));
  const std::size_t n = m + 1;  // nodes 0..m, wall at m + 1
  const double e = 2 * (1 - std::cos(k * h)) / (h * h);
  CMat a = CMat::Zero(n, n);
  CVec b = CVec::Zero(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = std::min(static_cast<double>(j) * h / width, 1.0);
    a(j, j) = 2 / (h * h) - I * strength * std::pow(u, 4) - e;
    if (j + 1 < n) a(j, j + 1) = a(j + 1, j) = -1 / (h * h);
  }
  const Complex ph = std::exp(I * k * h);
  a(0, 0) += -ph / (h * h);
  b[0] = (std::conj(ph) - ph) / (h * h);
  const CVec psi = a.partialPivLu().solve(b);
  return std::norm(psi[0] - 1.0);
}

}  // namespace

TEST_CASE("smooth ramp is a C-infinity step") {
  CHECK(smooth_ramp(-1.0, 10.0) == 0.0);
  CHECK(smooth_ramp(0.0, 10.0) == 0.0);
  CHECK(smooth_ramp(10.0, 10.0) == 1.0);
  CHECK(smooth_ramp(3.0, 0.0) == 1.0);
  CHECK(smooth_ramp(5.0, 10.0) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double t = 0.1 * k;
    CHECK(smooth_ramp(t, 10.0) + smooth_ramp(10.0 - t, 10.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(smooth_ramp(t, 10.0) >= prev);
    prev = smooth_ramp(t, 10.0);
  }
  CHECK(smooth_ramp(0.1, 10.0) < 1e-30);
}

TEST_CASE("absorber reflection matches a dense scattering solve") {
  const auto conv = KineticConvention::reduced();
  for (double k : {0.2, 0.5, 0.9})
    for (double eta : {0.0, 0.05, 0.5, 3.0})
      CHECK(absorber_reflection(conv, 0.4, 30.0, eta, k) ==
            doctest::Approx(reflection_oracle(0.4, 30.0, eta, k)).epsilon(1e-8));
  // Without damping the wall reflects everything.
  CHECK(absorber_reflection(conv, 0.4, 30.0, 0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-10));

  const auto tuned = tune_absorber(conv, 0.4, 40.0, {0.21});
  CHECK(tuned.worst_reflection < 1e-3);
  CHECK(tuned.worst_reflection == doctest::Approx(absorber_reflection(conv, 0.4, 40.0, tuned.strength, 0.21)));
  for (double f : {0.5, 2.0})
    CHECK(absorber_reflection(conv, 0.4, 40.0, tuned.strength * f, 0.21) > tuned.worst_reflection);
  CHECK_THROWS_AS(tune_absorber(conv, 0.4, 40.0, {}), ValidationError);
}

TEST_CASE("discrete momentum inverts the lattice dispersion") {
  const auto conv = KineticConvention::half(0.5);
  for (double k : {0.1, 0.7, 2.0}) {
    const double e = 2 * conv.coefficient() * (1 - std::cos(k * 0.3)) / (0.09);
    CHECK(discrete_momentum(conv, 0.3, e) == doctest::Approx(k).epsilon(1e-12));
  }
  CHECK_THROWS_AS(discrete_momentum(conv, 0.3, -1.0), RangeError);
}

TEST_CASE("detector flux of plane waves and real fields") {
  auto s = small_setup(10.0, 8.0, 0.25);
  const auto box = detector_box(s);
  const double k = 0.8, amp = 0.3;
  ComplexField2D wave(s.grid_x, s.grid_y);
  for (std::size_t j = 0; j < wave.ny(); ++j)
    for (std::size_t i = 0; i < wave.nx(); ++i) wave(i, j) = amp * std::exp(I * k * s.grid_x[i]);
  const double length = s.grid_y[box.iy_hi] - s.grid_y[box.iy_lo];
  const double h = s.grid_x.spacing();
  // Exact lattice current 2c sin(kh)/h |A|^2 per unit length, 2ck in the continuum limit.
  const double exact = 2 * std::sin(k * h) / h * amp * amp * length;
  CHECK(flux_through_line(wave, box, Detector::plus_x, s.convention) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(flux_through_line(wave, box, Detector::minus_x, s.convention) == doctest::Approx(-exact).epsilon(1e-12));
  CHECK(std::abs(flux_through_line(wave, box, Detector::plus_y, s.convention)) < 1e-14);
  CHECK(exact == doctest::Approx(2 * k * amp * amp * length).epsilon(k * k * h * h / 6 * 1.01));
  CHECK(flux_through_line(wave, box, Detector::plus_x, KineticConvention::half()) == doctest::Approx(exact / 2));

  ComplexField2D real(s.grid_x, s.grid_y);
  for (std::size_t j = 0; j < real.ny(); ++j)
    for (std::size_t i = 0; i < real.nx(); ++i) real(i, j) = std::cos(s.grid_x[i]) * std::exp(-s.grid_y[j] * s.grid_y[j]);
  for (int side = 0; side < 4; ++side)
    CHECK(flux_through_line(real, box, static_cast<Detector>(side), s.convention) == 0.0);
}

TEST_CASE("box norm derivative equals the net detector flux") {
  auto s = small_setup(10.0, 8.0, 0.25);
  s.perturbation = bump_field(s.grid_x, s.grid_y);
  s.absorber = {true, 2.5, 2.0, 1.0, 1.0};
  const auto box = detector_box(s);
  Propagator prop(s);
  ComplexField2D psi = packet(s.grid_x, s.grid_y, 1.0, -2.0, 0.6, -0.9, 2.0);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (auto& v : psi.data()) v += 1e-3 * Complex(nd(rng), nd(rng));  // rough, non-separable field
  const auto dpsi = prop.time_derivative(psi, 1.0);
  double dn = 0.0;
  for (std::size_t j = box.iy_lo; j <= box.iy_hi; ++j)
    for (std::size_t i = box.ix_lo; i <= box.ix_hi; ++i) {
      const double w = (i == box.ix_lo || i == box.ix_hi ? 0.5 : 1.0) * (j == box.iy_lo || j == box.iy_hi ? 0.5 : 1.0);
      dn += w * 2 * std::real(std::conj(psi(i, j)) * dpsi(i, j));
    }
  dn *= s.grid_x.spacing() * s.grid_y.spacing();
  double out = 0.0;
  for (int side = 0; side < 4; ++side) out += flux_through_line(psi, box, static_cast<Detector>(side), s.convention);
  CHECK(std::abs(out) > 1e-3);
  CHECK(dn == doctest::Approx(-out).epsilon(1e-6));
}

TEST_CASE("one split step equals the dense product of Cayley factors") {
  auto s = small_setup(3.0, 2.4, 0.6);  // 11 x 9
  s.perturbation = bump_field(s.grid_x, s.grid_y);
  s.ramp_duration = 1.0;
  s.dt = 0.1;
  s.detector_x = 1.2;
  s.detector_y = 1.2;
  Propagator prop(s);
  ComplexField2D psi = packet(s.grid_x, s.grid_y, 0.3, 0.2, 0.5, -0.4, 0.9);
  for (double t : {0.0, 0.3, 2.0}) {
    const CVec before = flatten(psi);
    prop.step(psi, t);
    const double lam = smooth_ramp(t + 0.05, 1.0);
    const CMat ax = axis_operator(s, true, lam), ay = axis_operator(s, false, lam);
    const CVec expect = cayley(ax, 0.05) * (cayley(ay, 0.1) * (cayley(ax, 0.05) * before));
    CHECK((flatten(psi) - expect).norm() < 1e-12 * expect.norm());
  }
}

TEST_CASE("split scheme converges at second order in dt") {
  auto s = small_setup(3.0, 2.4, 0.6);
  s.perturbation = bump_field(s.grid_x, s.grid_y);
  s.detector_x = 1.2;
  s.detector_y = 1.2;
  const CMat h = axis_operator(s, true, 1.0) + axis_operator(s, false, 1.0);
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const double t_end = 2.0;
  const ComplexField2D psi0 = packet(s.grid_x, s.grid_y, 0.3, 0.2, 0.5, -0.4, 0.9);
  CVec phases = (-I * t_end * es.eigenvalues().cast<Complex>()).array().exp();
  const CVec exact = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * flatten(psi0);
  std::vector<double> errors;
  for (double dt : {0.04, 0.02, 0.01}) {
    s.dt = dt;
    Propagator prop(s);
    ComplexField2D psi = psi0;
    const auto steps = static_cast<int>(std::lround(t_end / dt));
    for (int n = 0; n < steps; ++n) prop.step(psi, n * dt);
    errors.push_back((flatten(psi) - exact).norm());
  }
  CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(errors[1] / errors[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("separable eigenstates pick up the exact Cayley phase") {
  auto s = small_setup(12.0, 10.0, 0.2);
  s.dt = 0.1;
  const auto conv = s.convention;
  Eigen1DOptions lax;
  lax.edge_amplitude_tol = 1e-3;
  const auto sx = solve_bound_states(Potential1D::gaussian_well(1.4, 2.0), s.grid_x, conv, lax);
  const auto sy = solve_bound_states(Potential1D::gaussian_well(2.2, 1.5), s.grid_y, conv, lax);
  const ComplexField2D psi0 = product_field(s.grid_x, sx.bound_states[0].wavefunction, s.grid_y,
                                            sy.bound_states[0].wavefunction, s.grid_x, s.grid_y);
  ComplexField2D psi = psi0;
  Propagator prop(s);
  const int steps = 500;
  for (int n = 0; n < steps; ++n) prop.step(psi, n * s.dt);
  Complex ov{0.0, 0.0};
  for (std::size_t k = 0; k < psi.data().size(); ++k) ov += std::conj(psi0.data()[k]) * psi.data()[k];
  ov *= s.grid_x.spacing() * s.grid_y.spacing();
  auto factor = [](double e, double tau) { return (1.0 - I * tau / 2.0 * e) / (1.0 + I * tau / 2.0 * e); };
  const Complex per_step = factor(sx.energy(0), 0.05) * factor(sx.energy(0), 0.05) * factor(sy.energy(0), 0.1);
  const Complex expect = std::pow(per_step, steps);
  CHECK(std::abs(ov - expect) < 1e-8);
}

TEST_CASE("norm is conserved and the scheme is time reversible without absorber") {
  auto s = small_setup(12.0, 10.0, 0.25);
  s.perturbation = bump_field(s.grid_x, s.grid_y);
  s.dt = 0.1;
  ComplexField2D psi0 = packet(s.grid_x, s.grid_y, 1.0, -0.5, 0.7, 0.4, 1.5);
  ComplexField2D psi = psi0;
  Propagator prop(s);
  for (int n = 0; n < 1000; ++n) prop.step(psi, n * s.dt);
  CHECK(std::abs(grid_norm(psi) - 1.0) <= 1e-10);
  for (auto& v : psi.data()) v = std::conj(v);
  for (int n = 0; n < 1000; ++n) prop.step(psi, n * s.dt);
  for (auto& v : psi.data()) v = std::conj(v);
  Complex ov{0.0, 0.0};
  for (std::size_t k = 0; k < psi.data().size(); ++k) ov += std::conj(psi0.data()[k]) * psi.data()[k];
  ov *= s.grid_x.spacing() * s.grid_y.spacing();
  CHECK(std::norm(ov) > 1 - 1e-8);
}

TEST_CASE("an outgoing packet is absorbed and fully accounted for by the detectors") {
  PropagationSetup s;
  s.grid_x = Grid1D::symmetric(40.0, 0.25);
  s.grid_y = Grid1D::symmetric(20.0, 0.25);
  s.convention = KineticConvention::reduced();
  s.potential_x.assign(s.grid_x.size(), 0.0);
  s.potential_y.assign(s.grid_y.size(), 0.0);
  s.dt = 0.05;
  s.n_steps = 500;
  s.sample_every = 20;
  apply_default_geometry(s);
  CHECK(s.absorber.width_x == doctest::Approx(10.0));
  CHECK(s.detector_x == doctest::Approx(28.0));
  const double k = 1.5;
  const auto tuned = tune_absorber(s.convention, 0.25, s.absorber.width_x, {k - 0.5, k, k + 0.5});
  s.absorber.strength_x = s.absorber.strength_y = tuned.strength;
  ComplexField2D psi = packet(s.grid_x, s.grid_y, 0.0, 0.0, k, 0.0, 2.5);
  const ComplexField2D ref = psi;
  const auto rec = propagate(s, psi, ref);
  // Transverse spreading sends a few percent through the y lines.
  CHECK(rec.cumulative_flux[0].back() > 0.95);
  CHECK(std::abs(rec.cumulative_flux[1].back()) < 1e-3);
  CHECK(rec.flux_total() + rec.interior_norm.back() == doctest::Approx(rec.interior_norm.front()).epsilon(1e-3));
  CHECK(rec.max_bookkeeping_error < 1e-3);
  CHECK(rec.fluxes_nonnegative);
  CHECK(rec.directionality > 0.95);
  CHECK(grid_norm(psi) < 5e-3);
  CHECK(rec.times.size() == 26);
}

TEST_CASE("propagation preconditions and non-finite detection") {
  auto s = small_setup(12.0, 10.0, 0.25);
  s.n_steps = 5;
  s.absorber = {true, 3.0, 2.5, 1.0, 1.0};
  s.detector_x = 9.5;  // inside the absorber layer
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.detector_x = 8.0;
  CHECK_NOTHROW(s.validate());
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.dt = 0.02;
  CHECK(s.within_accuracy_guard());
  s.dt = 0.1;
  CHECK_FALSE(s.within_accuracy_guard());
  s.potential_y.pop_back();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.potential_y.push_back(0.0);

  ComplexField2D psi = packet(s.grid_x, s.grid_y, 0.0, 0.0, 0.0, 0.0, 1.0);
  const ComplexField2D ref = psi;
  psi(5, 5) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  s.sample_every = 1;
  CHECK_THROWS_AS(propagate(s, psi, ref), NumericalError);
}

TEST_CASE("decay-rate fits") {
  std::vector<double> t, s;
  for (int k = 0; k <= 200; ++k) t.push_back(k * 0.5), s.push_back(std::exp(-0.01 * k * 0.5));
  auto fit = fit_decay_rate(t, s);
  CHECK(fit.gamma == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(std::abs(fit.gamma - 0.01) < 1e-5);
  CHECK(fit.residual < 1e-12);
  CHECK_FALSE(fit.quality_warning);

  std::vector<double> flat(t.size(), 0.8);
  fit = fit_decay_rate(t, flat);
  CHECK(std::abs(fit.gamma) < 1e-15);

  // Transient in the first 20% is excluded.
  auto bumped = s;
  for (int k = 0; k < 30; ++k) bumped[k] *= 1.0 + 0.3 * std::cos(k);
  CHECK(fit_decay_rate(t, bumped, 0.2).gamma == doctest::Approx(0.01).epsilon(1e-6));

  std::vector<double> noisy = s;
  for (std::size_t k = 0; k < noisy.size(); ++k) noisy[k] *= k % 2 ? 1.5 : 0.6;
  CHECK(fit_decay_rate(t, noisy).quality_warning);
  CHECK_THROWS_AS(fit_decay_rate({1.0}, {1.0, 2.0}), ValidationError);
}
