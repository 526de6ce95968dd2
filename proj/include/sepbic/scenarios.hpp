#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepbic/config.hpp"
#include "sepbic/coupling.hpp"
#include "sepbic/eigen1d.hpp"
#include "sepbic/lattice.hpp"
#include "sepbic/separable.hpp"
#include "sepbic/tdse2d.hpp"

namespace sepbic {

inline constexpr const char* kVersion = "0.1.0";

/// One Gaussian well axis: -depth * exp(-2 (x - center)^2 / width^2) on a
/// symmetric grid.
struct GaussianAxisSpec {
  std::string label;
  double depth = 0.0;
  double width = 1.0;
  double center = 0.0;
  double half_extent = 0.0;
  double spacing = 0.0;

  Potential1D potential() const { return Potential1D::gaussian_well(depth, width, center); }
  Grid1D grid() const { return Grid1D::symmetric(half_extent, spacing); }
};

/// [system] axes = x,y and one [axis.<label>] section per axis.
std::vector<GaussianAxisSpec> axes_from_config(const Config& config);

// ---------------------------------------------------------------------------
// Convention calibration

struct CalibrationTarget {
  std::string quantity;            // e.g. "E(2,1)" or "x[0]"
  std::vector<std::size_t> state;  // product state; empty for a single-axis level
  std::size_t axis = 0;
  std::size_t level = 0;
  double value = 0.0;
};

struct CalibrationCandidate {
  KineticConvention convention;
  std::vector<double> computed;  // NaN where the level does not exist
  double max_relative_error = 0.0;
  bool matches = false;
};

struct CalibrationReport {
  std::vector<CalibrationTarget> targets;
  std::vector<CalibrationCandidate> candidates;
  std::optional<std::size_t> selected;
  double tolerance = 0.05;

  /// Throws NumericalError with every candidate's numbers when nothing matched.
  const CalibrationCandidate& chosen() const;
  std::string describe() const;
};

/// Solve under H = -d^2 + V and H = -(1/2) d^2 + V and keep the candidate whose
/// targets all agree within `tolerance` (relative); the smaller worst error wins.
CalibrationReport calibrate_convention(const std::vector<GaussianAxisSpec>& axes,
                                       const std::vector<CalibrationTarget>& targets, double tolerance = 0.05);

/// [calibration] state/energy and axis.<label> level lists.
std::vector<CalibrationTarget> calibration_targets(const Config& config, const std::vector<GaussianAxisSpec>& axes);

/// [system] convention = reduced | half | calibrate.
KineticConvention resolve_convention(const Config& config, CalibrationReport* report = nullptr);

// ---------------------------------------------------------------------------
// Paraxial optics (lengths in micrometres, propagation constants in 1/um)

struct ParaxialSystem {
  double n0 = 2.3;
  double lambda_um = 0.485;  // vacuum wavelength
  double dn0 = 5.7e-4;
  double sigma_um = 30.0;

  void validate() const;
  double k() const;   // 2 pi n0 / lambda
  double k0() const;  // 2 pi / lambda
};

struct ParaxialInterpretation {
  enum class Width { half_width, full_width };  // sigma as printed, or sigma / 2 in the exponent
  enum class Depth { k_dn_over_n0, k_dn, k0_dn_over_n0 };
  Width width = Width::half_width;
  Depth depth = Depth::k_dn_over_n0;

  std::string name() const;
};

std::vector<ParaxialInterpretation> paraxial_interpretations();

struct ReducedParaxial {
  GaussianAxisSpec axis;  // per-axis well in 1/um, axis label x
  KineticConvention convention;  // c = 1 / (2k)
};

ReducedParaxial paraxial_to_reduced(const ParaxialSystem& p, const ParaxialInterpretation& interp,
                                    double half_extent_um, double spacing_um);

/// beta_j = -E_j, converted from 1/um to 1/mm.
std::vector<double> beta_per_mm(const Spectrum1D& spectrum);

struct ParaxialSweepEntry {
  ParaxialInterpretation interpretation;
  std::vector<double> beta_per_mm;
  double max_deviation = 0.0;  // vs published values when the counts agree, else +inf
  double half_extent_um = 0.0;
};

struct ParaxialSweep {
  std::vector<ParaxialSweepEntry> entries;
  std::optional<std::size_t> selected;  // exactly as many modes as published, smallest deviation
};

ParaxialSweep paraxial_sweep(const ParaxialSystem& p, const std::vector<double>& published_beta,
                             double half_extent_um, double spacing_um);

// ---------------------------------------------------------------------------
// Cold atoms in reduced units xi = 2 m E x0^2 / hbar^2

struct ColdAtomUnits {
  double mass_amu = 86.909180527;  // Rb-87
  double lambda_um = 1.064;
  double x0_um = 1.0;

  double mass_kg() const;
  double recoil_energy_joule() const;  // h^2 / (2 m lambda^2)
  double recoil_reduced() const;       // (2 pi x0 / lambda)^2
  double reduced_from_joule(double e) const;
};

struct ColdAtomSummary {
  double sheet_depth = 0.0;
  double sheet_width = 0.0;
  std::size_t bound_per_sheet = 0;
  double xi_c = 0.0;
  std::vector<std::size_t> state;
  double state_energy = 0.0;
  bool state_is_bic = false;
  std::size_t bic_total = 0;
  double recoil_reduced = 0.0;
  double depth_in_recoils = 0.0;  // total quoted depth / E_r
  double stated_depth_recoils = 10.0;
};

/// Three identical sheets of depth total/3; wavefunctions are kept on axis 0 only.
SeparableSystem coldatom_system(const Config& config);
ColdAtomSummary coldatom_summary(const Config& config, const SeparableSystem& sys,
                                 const BICSearchResult* bics = nullptr);

// ---------------------------------------------------------------------------
// Perturbations and radiation runs for 2D Gaussian systems

/// [perturbation] kind = none | odd_x | even_y | even_z | even_xy | even_all,
/// strength. `psi_x` is the BIC's x factor on grids[0] (for the balanced
/// even_y pair).
std::optional<PerturbationSpec> perturbation_from_config(const Config& config, const std::vector<Grid1D>& grids,
                                                         const std::vector<double>& psi_x);

struct RadiationRun {
  double energy = 0.0;            // BIC energy on the shared spacing
  double strength = 0.0;
  std::optional<CouplingReport> golden;
  RadiationRecord record;
  DecayFit fit;
  ReflectionResult absorber_x, absorber_y;
  double y_fraction = 0.0;  // y flux / total flux
  double period = 0.0;      // 2 pi / |E|
};

/// Golden-rule widths on [propagation] basis boxes and a TDSE run on the
/// [propagation] grid, both at the same spacing.
RadiationRun run_radiation(const Config& config);

// ---------------------------------------------------------------------------
// Scenarios

std::vector<std::string> scenario_names();
/// Built-in defaults; "custom" is empty.
Config scenario_preset(const std::string& name);
/// Throws ValidationError listing every missing key.
void validate_scenario_config(const Config& config);

struct ScenarioResult {
  std::string name;
  std::string out_dir;
  std::string config_hash;
  std::string convention;
  std::vector<std::string> files;
  std::map<std::string, std::string> summary;
};

/// Runs every stage and writes CSV/binary outputs plus manifest.txt to
/// out_dir. A failing stage rethrows with the stage name; files already
/// written and a manifest with the failure are kept.
ScenarioResult run_scenario(const Config& config, const std::string& out_dir);

}  // namespace sepbic
