#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sepbic/grid.hpp"
#include "sepbic/kinetic.hpp"

namespace sepbic {

using Complex = std::complex<double>;

/// Quartic imaginary potential -i W on the outer layer of each axis:
/// W(d) = strength * (d / width)^4 for depth d into the layer.
struct AbsorberSpec {
  bool enabled = true;
  double width_x = 0.0;
  double width_y = 0.0;
  double strength_x = 0.0;
  double strength_y = 0.0;
};

/// Samples of W on a grid for one axis.
std::vector<double> absorber_profile(const Grid1D& grid, double width, double strength);

struct ReflectionResult {
  double strength = 0.0;
  double worst_reflection = 0.0;  // max |R|^2 over the momenta at that strength
};

/// |R|^2 of a discrete plane wave of momentum k hitting the absorbing layer
/// backed by a Dirichlet wall, from the stationary finite-difference recursion.
double absorber_reflection(KineticConvention convention, double spacing, double width, double strength, double k);

/// Strength minimizing the worst |R|^2 over the given momenta (log scan then
/// golden-section refinement).
ReflectionResult tune_absorber(KineticConvention convention, double spacing, double width,
                               const std::vector<double>& momenta);

/// Lattice momentum of a free discrete wave with kinetic energy e > 0.
double discrete_momentum(KineticConvention convention, double spacing, double e);

/// C-infinity switch from 0 at t = 0 to 1 at t = duration.
double smooth_ramp(double t, double duration);

struct PropagationSetup {
  Grid1D grid_x;
  Grid1D grid_y;
  KineticConvention convention;
  std::vector<double> potential_x;  // separable base potential
  std::vector<double> potential_y;
  RealField2D perturbation;        // full-strength dV; empty grids mean none
  double ramp_duration = 0.0;      // dV is multiplied by smooth_ramp(t)
  double dt = 0.05;
  std::size_t n_steps = 0;
  std::size_t sample_every = 10;
  AbsorberSpec absorber;
  double detector_x = 0.0;  // lines x = +-detector_x, y = +-detector_y
  double detector_y = 0.0;

  /// Throws ValidationError for inconsistent sizes or detectors not strictly
  /// inside the absorber-free region.
  void validate() const;
  /// The accuracy guard dt < h^2 / 2 on the finer axis.
  bool within_accuracy_guard() const;
};

/// Default detector/absorber geometry: absorber on the outer 25% of each
/// half-extent, detectors at 70%.
void apply_default_geometry(PropagationSetup& setup);

enum class Detector { plus_x = 0, minus_x = 1, plus_y = 2, minus_y = 3 };

struct DetectorBox {
  std::size_t ix_lo, ix_hi, iy_lo, iy_hi;  // node indices of the four lines
};

DetectorBox detector_box(const PropagationSetup& setup);

/// Outward probability flux through one side of the detector box, from link
/// currents J = 2c/h Im(psi_i^* psi_{i+1}) averaged onto the node line and
/// integrated with trapezoid weights between the box corners.
double flux_through_line(const ComplexField2D& psi, const DetectorBox& box, Detector side,
                         KineticConvention convention);

/// Trapezoid-weighted norm inside the detector box (boundary lines weigh 1/2).
double region_norm(const ComplexField2D& psi, const DetectorBox& box);

/// Grid norm hx * hy * sum |psi|^2.
double grid_norm(const ComplexField2D& psi);

/// Strang-split Crank-Nicolson propagator: C_x(dt/2) C_y(dt) C_x(dt/2), each C
/// a per-line Cayley factor solved with a complex Thomas sweep. dV is split
/// half into each axis factor.
class Propagator {
 public:
  explicit Propagator(PropagationSetup setup);

  const PropagationSetup& setup() const noexcept { return setup_; }
  /// One step from time t (the perturbation strength is taken at t + dt/2).
  void step(ComplexField2D& psi, double t);
  /// dpsi/dt = -i H(t) psi, for continuity checks.
  ComplexField2D time_derivative(const ComplexField2D& psi, double t) const;

 private:
  // Thomas factors for every line, x index fastest; a single shared line when
  // the operator is separable.
  struct AxisFactors {
    bool per_line = false;
    std::vector<Complex> diag;  // A diagonal
    std::vector<Complex> cp;    // modified super-diagonal
    std::vector<Complex> inv;   // 1 / pivot
  };
  void refresh(double strength);
  void sweep_x(ComplexField2D& psi, double theta, const AxisFactors& f) const;
  void sweep_y(ComplexField2D& psi, double theta, const AxisFactors& f) const;
  std::vector<Complex> diag_x(std::size_t j, double strength) const;
  std::vector<Complex> diag_y(std::size_t i, double strength) const;

  PropagationSetup setup_;
  std::vector<double> wx_, wy_;
  bool has_perturbation_ = false;
  double cached_strength_ = -1.0;
  AxisFactors fx_;  // theta = dt/4
  AxisFactors fy_;  // theta = dt/2
  mutable std::vector<Complex> scratch_;
};

struct RadiationRecord {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> interior_norm;
  std::vector<double> total_norm;
  std::array<std::vector<double>, 4> cumulative_flux;  // +x, -x, +y, -y
  double directionality = 0.0;  // (Phi_+x + Phi_-x) / Phi_total at the end
  double max_bookkeeping_error = 0.0;  // max |interior + sum Phi - 1|
  bool fluxes_nonnegative = true;

  double flux_total() const;
  double flux_x() const;
  double flux_y() const;
};

/// Propagate psi0 (overwritten with the final state) and record observables
/// against the reference state (usually the BIC itself).
RadiationRecord propagate(const PropagationSetup& setup, ComplexField2D& psi, const ComplexField2D& reference);

struct DecayFit {
  double gamma = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of log-survival residuals
  std::size_t points = 0;
  bool quality_warning = false;
};

/// Least-squares slope of log survival against time, ignoring the first
/// `exclude_fraction` of the series.
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& survival,
                        double exclude_fraction = 0.2);

/// Product wavefunction on the 2D grid from per-axis samples (interpolated when
/// grids differ), normalized to hx * hy * sum |psi|^2 = 1.
ComplexField2D product_field(const Grid1D& from_x, const std::vector<double>& fx, const Grid1D& from_y,
                             const std::vector<double>& fy, const Grid1D& to_x, const Grid1D& to_y);

}  // namespace sepbic
