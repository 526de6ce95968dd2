#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sepbic/grid.hpp"
#include "sepbic/kinetic.hpp"

namespace sepbic {

enum class Parity { even, odd, none };

std::string to_string(Parity p);
Parity parse_parity(const std::string& s);
/// Product of parities; none absorbs.
Parity operator*(Parity a, Parity b);

/// One separated 1D potential: a Gaussian well -depth * exp(-2 (x-c)^2 / width^2)
/// or samples on a grid (linearly interpolated elsewhere, zero outside).
class Potential1D {
 public:
  enum class Kind { gaussian_well, tabulated };

  static Potential1D gaussian_well(double depth, double width, double center = 0.0);
  static Potential1D tabulated(Grid1D grid, std::vector<double> samples);
  static Potential1D zero() { return tabulated(Grid1D(-1.0, 1.0, 3), {0.0, 0.0, 0.0}); }

  Kind kind() const noexcept { return kind_; }
  double depth() const noexcept { return depth_; }
  double width() const noexcept { return width_; }
  double center() const noexcept { return center_; }

  double operator()(double x) const;
  std::vector<double> sample(const Grid1D& grid) const;
  /// Characteristic length used by box-size preconditions (width, or support of the tabulation).
  double extent() const;

 private:
  Kind kind_ = Kind::tabulated;
  double depth_ = 0.0;
  double width_ = 1.0;
  double center_ = 0.0;
  Grid1D table_grid_;
  std::vector<double> table_;
};

struct BoundState {
  std::size_t index = 0;
  double energy = 0.0;
  std::vector<double> wavefunction;  // grid-normalized: h * sum psi^2 = 1
  Parity parity = Parity::none;
  std::size_t nodes = 0;
};

/// Bound spectrum of one separated axis. Energies are measured so the axis
/// continuum occupies [continuum_edge, continuum_top].
struct Spectrum1D {
  std::string axis_label;
  Grid1D grid;
  KineticConvention convention;
  std::vector<BoundState> bound_states;
  double continuum_edge = 0.0;
  double continuum_top = std::numeric_limits<double>::infinity();

  std::size_t size() const noexcept { return bound_states.size(); }
  double energy(std::size_t n) const { return bound_states.at(n).energy; }
  Parity parity(std::size_t n) const { return bound_states.at(n).parity; }
  bool symmetric() const;
};

struct Eigen1DOptions {
  /// Bound states must fall below -(continuum_tol * max|V|).
  double continuum_tol = 1e-9;
  /// Highest bound state's edge amplitude relative to its peak.
  double edge_amplitude_tol = 1e-6;
  /// |V(edge)| relative to the well depth.
  double potential_edge_tol = 1e-8;
};

Spectrum1D solve_bound_states(const Potential1D& pot, const Grid1D& grid, KineticConvention convention,
                              const Eigen1DOptions& options = {}, const std::string& axis_label = "x");

/// Sign changes of psi ignoring samples below 1e-8 of the peak.
std::size_t count_nodes(const std::vector<double>& psi);
/// Mirror parity on a symmetric grid, from the sign of <psi(x), psi(-x)>.
Parity mirror_parity(const Grid1D& grid, const std::vector<double>& psi);
/// Samples symmetric under x -> -x to relative 1e-12.
bool is_mirror_symmetric(const Grid1D& grid, const std::vector<double>& samples, double rel_tol = 1e-12);

struct ContinuumState {
  double energy = 0.0;
  std::vector<double> wavefunction;
  Parity parity = Parity::none;
  /// Local spacing to same-parity neighbours (the 1/rho of this level's class).
  double spacing = 0.0;
};

struct BoxContinuumSet {
  enum class Normalization { box, energy };
  Grid1D box_grid;
  std::vector<ContinuumState> states;  // ascending energy
  Normalization normalization = Normalization::energy;
  bool symmetric = false;
};

struct BoxOptions {
  /// Box half-extent must be at least this multiple of the potential extent (0 disables).
  double min_box_factor = 10.0;
  BoxContinuumSet::Normalization normalization = BoxContinuumSet::Normalization::energy;
};

/// Positive-energy eigenstates of the same operator on a large box, 0 < E < e_max.
BoxContinuumSet solve_box_continuum(const Potential1D& pot, const Grid1D& box, KineticConvention convention,
                                    double e_max, const BoxOptions& options = {});

/// Density of states at E from the level staircase (midpoint spacings, linearly
/// interpolated). With a parity filter only that class is counted; otherwise all
/// classes are summed. Throws RangeError outside the covered window.
double density_of_states(const BoxContinuumSet& set, double energy, std::optional<Parity> parity = std::nullopt);

/// Bound states and box continuum of one axis on a single shared grid, the
/// basis used for matrix elements.
struct AxisBasis {
  Spectrum1D bound;
  BoxContinuumSet continuum;
  std::vector<double> potential;  // samples on bound.grid
};

AxisBasis solve_axis(const Potential1D& pot, const Grid1D& grid, KineticConvention convention, double e_max,
                     const std::string& axis_label, const Eigen1DOptions& eigen_options = {},
                     const BoxOptions& box_options = {});

}  // namespace sepbic
