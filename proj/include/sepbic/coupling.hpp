#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepbic/eigen1d.hpp"
#include "sepbic/separable.hpp"

namespace sepbic {

/// One per-axis factor of a perturbation term, as a function of the coordinate.
struct FactorSpec {
  std::function<double(double)> f;
  Parity parity = Parity::none;
  std::string description;
};

namespace factors {
/// exp(-(x-a)^2 / s^2)
FactorSpec bump(double center, double width);
/// bump(a) + bump(-a)
FactorSpec even_pair(double offset, double width);
/// bump(a) - bump(-a)
FactorSpec odd_pair(double offset, double width);
FactorSpec constant(double value = 1.0);
/// bump(a1, s1) - w * bump(a2, s2) with w chosen so <psi|factor|psi> = 0 for
/// the given grid function; generic parity.
FactorSpec balanced_pair(double a1, double s1, double a2, double s2, const Grid1D& grid,
                         std::span<const double> psi);
}  // namespace factors

struct TermSpec {
  double amplitude = 1.0;
  std::vector<FactorSpec> factors;  // one per axis
};

struct Perturbation;

/// dV = strength * sum_t amplitude_t * prod_i f_ti(x_i), before tabulation.
struct PerturbationSpec {
  std::string name;
  double strength = 1.0;
  std::vector<TermSpec> terms;

  /// Tabulate on per-axis grids; labelled parities are verified numerically on
  /// symmetric grids (|f(x) -+ f(-x)| < 1e-10 |f|), else ValidationError.
  Perturbation tabulate(const std::vector<Grid1D>& grids) const;
  PerturbationSpec scaled(double factor) const;
};

struct PerturbationTerm {
  double amplitude = 1.0;
  std::vector<std::vector<double>> factors;
  std::vector<Parity> parity;
};

struct Perturbation {
  std::string name;
  double strength = 1.0;
  std::vector<Grid1D> grids;
  std::vector<PerturbationTerm> terms;

  std::size_t dimension() const noexcept { return grids.size(); }
  /// Parity shared by every term on the axis, none otherwise.
  Parity parity_on(std::size_t axis) const;
  /// Full 2D field strength * sum_t a_t f_x f_y, x index fastest.
  RealField2D field_2d() const;
};

/// A separable wavefunction: one grid function per axis.
using SeparableState = std::vector<std::span<const double>>;

SeparableState bound_product_state(const std::vector<AxisBasis>& bases, const ProductState& state);

/// <bra| dV |ket>, factorized into per-axis trapezoidal integrals.
double matrix_element(const SeparableState& bra, const Perturbation& pert, const SeparableState& ket);

/// Parity selection: the axis on which every term vanishes by parity for these
/// per-axis bra/ket parities, if any.
std::optional<std::size_t> parity_forbidden_axis(const Perturbation& pert, const std::vector<Parity>& bra,
                                                 const std::vector<Parity>& ket);

inline constexpr const char* kRateConvention = "Gamma = 2*pi*|M|^2*rho (hbar = 1)";

struct ChannelCoupling {
  ContinuumChannel channel;
  std::string label;
  std::string family;           // delocalized axis labels, e.g. "y" or "xy"
  double matrix_element_sq = 0.0;  // DoS-weighted mean of box-normalized |M|^2 at E
  double density = 0.0;            // rho_c(E)
  double width = 0.0;              // Gamma_c
  bool selection_rule_zero = false;
  std::optional<std::size_t> forbidden_axis;
  /// Largest energy-normalized |M| sampled near E, relative to the Cauchy-Schwarz scale.
  double max_relative_element = 0.0;
};

struct CouplingReport {
  std::string rate_convention = kRateConvention;
  double energy = 0.0;
  std::vector<ChannelCoupling> channels;
  /// Gamma summed per delocalized-axis family ("x", "y", "z", "xy", ...).
  std::map<std::string, double> family_width;
  double total_width = 0.0;
  std::vector<std::string> selection_rule_zeros;

  double width_for(const std::string& family) const;
};

struct GoldenRuleOptions {
  /// Number of neighbouring level pairs used for multiply-delocalized channels.
  std::size_t multi_channel_pairs = 64;
  double zero_tolerance = 1e-12;
};

/// First-order partial widths of a BIC under dV. `bases` must be solved on the
/// same grids the perturbation was tabulated on, with continua covering E.
CouplingReport golden_rule_widths(const BICRecord& bic, const Perturbation& pert, const std::vector<AxisBasis>& bases,
                                  const GoldenRuleOptions& options = {});

struct ChannelSelection {
  ContinuumChannel channel;
  std::string label;
  std::string family;
  bool predicted_forbidden = false;
  std::optional<std::size_t> forbidden_axis;
  double max_relative_element = 0.0;
  bool numerically_forbidden = false;
};

struct DimensionalityReport {
  std::vector<ChannelSelection> channels;
  std::vector<std::string> radiating;
  std::vector<std::string> forbidden;
  /// Parity prediction and numerical matrix elements agree on every channel.
  bool consistent = true;
};

/// Partition the channels of a BIC into radiating and parity-forbidden under dV,
/// checking each against sampled matrix elements near the BIC energy.
DimensionalityReport dimensionality_selection(const BICRecord& bic, const Perturbation& pert,
                                              const std::vector<AxisBasis>& bases, double relative_tolerance = 1e-12);

/// sum_k v_ck v_ki / (e_i - e_k + i eta)
std::complex<double> second_order_sum(std::span<const std::complex<double>> v_ck,
                                      std::span<const std::complex<double>> v_ki, std::span<const double> e_k,
                                      double e_i, double eta);

struct SecondOrderOptions {
  /// Per-axis intermediate energy cut; defaults to 4 |E_BIC| when <= 0.
  double e_cut = 0.0;
  double eta = 0.0;  // defaults to half the smallest continuum spacing near E when <= 0
};

struct SecondOrderTerm {
  Parity final_parity = Parity::none;
  double final_energy = 0.0;
  std::complex<double> value;          // Richardson-extrapolated eta -> 0
  std::complex<double> value_eta;      // at eta
  std::complex<double> value_2eta;     // at 2 eta
  std::complex<double> value_double_cut;  // eta, cut 2 e_cut
};

struct SecondOrderAmplitude {
  ContinuumChannel channel;
  std::string label;
  std::vector<SecondOrderTerm> terms;  // one per final-state parity class
  double total_abs2 = 0.0;             // sum over classes of |T|^2 (energy-normalized final states)
  double eta = 0.0;
  double e_cut = 0.0;
  std::size_t intermediate_basis_size = 0;
  double relative_change_cut = 0.0;  // |T(2 cut) - T(cut)| / |T(2 cut)|, summed in quadrature
  bool over_smoothed = false;        // eta >= local level spacing
};

/// Second-order T_ci through intermediate product states of bound + box
/// states. Bases must carry continua up to twice the requested cut.
SecondOrderAmplitude second_order_amplitude(const BICRecord& bic, const ContinuumChannel& channel,
                                            const Perturbation& pert, const std::vector<AxisBasis>& bases,
                                            const SecondOrderOptions& options = {});

}  // namespace sepbic
