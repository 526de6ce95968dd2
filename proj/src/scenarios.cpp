#include "sepbic/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "sepbic/errors.hpp"
#include "sepbic/io.hpp"

namespace sepbic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join(const std::vector<double>& v, char sep = ';') {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? std::string(1, sep) : "") + format_double(v[k]);
  return s;
}

std::string join_idx(const std::vector<std::size_t>& v, char sep = ',') {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? std::string(1, sep) : "") + std::to_string(v[k]);
  return s;
}

std::string state_label(const std::vector<std::size_t>& idx) { return "|" + join_idx(idx) + ">"; }

std::vector<Spectrum1D> solve_spectra(const std::vector<GaussianAxisSpec>& axes, KineticConvention conv) {
  std::vector<Spectrum1D> out;
  for (const auto& a : axes) out.push_back(solve_bound_states(a.potential(), a.grid(), conv, {}, a.label));
  return out;
}

double edge_ratio(const std::vector<double>& psi) {
  double peak = 0.0;
  for (double v : psi) peak = std::max(peak, std::abs(v));
  return peak > 0.0 ? std::max(std::abs(psi.front()), std::abs(psi.back())) / peak : 0.0;
}

}  // namespace

std::vector<GaussianAxisSpec> axes_from_config(const Config& config) {
  std::vector<GaussianAxisSpec> out;
  for (const auto& label : split_list(config.get("system", "axes"))) {
    const std::string sec = "axis." + label;
    GaussianAxisSpec a;
    a.label = label;
    a.depth = config.get_double(sec, "depth");
    a.width = config.get_double(sec, "width");
    a.center = config.get_double(sec, "center", 0.0);
    a.half_extent = config.get_double(sec, "half_extent");
    a.spacing = config.get_double(sec, "spacing");
    if (!(a.width > 0.0) || !(a.half_extent > 0.0) || !(a.spacing > 0.0))
      throw ValidationError("[" + sec + "] width, half_extent and spacing must be positive");
    out.push_back(a);
  }
  if (out.size() < 2) throw ValidationError("[system] axes must list at least two axes");
  return out;
}

// ---------------------------------------------------------------------------

const CalibrationCandidate& CalibrationReport::chosen() const {
  if (!selected) throw NumericalError("kinetic convention calibration failed:\n" + describe());
  return candidates[*selected];
}

std::string CalibrationReport::describe() const {
  std::ostringstream s;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    s << cand.convention.name() << (selected && *selected == c ? " (selected)" : "") << ":";
    for (std::size_t k = 0; k < targets.size(); ++k)
      s << ' ' << targets[k].quantity << '=' << format_double(cand.computed[k]) << " (target "
        << format_double(targets[k].value) << ')';
    s << " max_rel_error=" << format_double(cand.max_relative_error) << '\n';
  }
  return s.str();
}

CalibrationReport calibrate_convention(const std::vector<GaussianAxisSpec>& axes,
                                       const std::vector<CalibrationTarget>& targets, double tolerance) {
  if (targets.empty()) throw ValidationError("calibration needs at least one target");
  CalibrationReport rep;
  rep.targets = targets;
  rep.tolerance = tolerance;
  for (const auto& conv : {KineticConvention::reduced(), KineticConvention::half()}) {
    CalibrationCandidate cand;
    cand.convention = conv;
    std::vector<Spectrum1D> sp;
    try {
      sp = solve_spectra(axes, conv);
    } catch (const NumericalError&) {
      sp.clear();
    }
    for (const auto& t : targets) {
      double v = kNaN;
      if (!sp.empty()) {
        if (!t.state.empty()) {
          if (t.state.size() == sp.size()) {
            bool ok = true;
            double e = 0.0;
            for (std::size_t a = 0; a < sp.size(); ++a) {
              if (t.state[a] >= sp[a].size()) ok = false;
              else e += sp[a].energy(t.state[a]);
            }
            if (ok) v = e;
          }
        } else if (t.axis < sp.size() && t.level < sp[t.axis].size()) {
          v = sp[t.axis].energy(t.level);
        }
      }
      cand.computed.push_back(v);
      const double err = std::isnan(v) ? kInf : std::abs(v - t.value) / std::abs(t.value);
      cand.max_relative_error = std::max(cand.max_relative_error, err);
    }
    cand.matches = cand.max_relative_error <= tolerance;
    rep.candidates.push_back(std::move(cand));
  }
  for (std::size_t c = 0; c < rep.candidates.size(); ++c)
    if (rep.candidates[c].matches &&
        (!rep.selected || rep.candidates[c].max_relative_error < rep.candidates[*rep.selected].max_relative_error))
      rep.selected = c;
  return rep;
}

std::vector<CalibrationTarget> calibration_targets(const Config& config, const std::vector<GaussianAxisSpec>& axes) {
  std::vector<CalibrationTarget> out;
  if (config.has("calibration", "state")) {
    CalibrationTarget t;
    t.state = config.get_indices("calibration", "state");
    t.value = config.get_double("calibration", "energy");
    t.quantity = "E" + state_label(t.state);
    out.push_back(t);
  }
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const std::string key = "axis." + axes[a].label;
    if (!config.has("calibration", key)) continue;
    const auto levels = config.get_doubles("calibration", key);
    for (std::size_t n = 0; n < levels.size(); ++n) {
      CalibrationTarget t;
      t.axis = a;
      t.level = n;
      t.value = levels[n];
      t.quantity = axes[a].label + "[" + std::to_string(n) + "]";
      out.push_back(t);
    }
  }
  if (out.empty()) throw ValidationError("convention = calibrate needs [calibration] targets");
  return out;
}

KineticConvention resolve_convention(const Config& config, CalibrationReport* report) {
  const std::string c = config.get("system", "convention", "reduced");
  if (c == "calibrate") {
    const auto axes = axes_from_config(config);
    auto rep = calibrate_convention(axes, calibration_targets(config, axes),
                                    config.get_double("calibration", "tolerance", 0.05));
    if (report) *report = rep;
    return rep.chosen().convention;
  }
  if (c == "half") return KineticConvention::half(config.get_double("system", "mass", 1.0));
  return parse_convention(c);
}

// ---------------------------------------------------------------------------

void ParaxialSystem::validate() const {
  if (!(n0 > 0.0) || !(lambda_um > 0.0) || !(sigma_um > 0.0) || dn0 < 0.0)
    throw ValidationError("paraxial parameters must be positive");
  if (!(dn0 / n0 < 1e-2)) throw ValidationError("paraxial approximation needs dn0 / n0 < 1e-2");
}

double ParaxialSystem::k() const { return 2.0 * std::numbers::pi * n0 / lambda_um; }
double ParaxialSystem::k0() const { return 2.0 * std::numbers::pi / lambda_um; }

std::string ParaxialInterpretation::name() const {
  std::string s = width == Width::half_width ? "sigma=half-width" : "sigma=full-width";
  switch (depth) {
    case Depth::k_dn_over_n0: return s + ",depth=k*dn0/n0";
    case Depth::k_dn: return s + ",depth=k*dn0";
    case Depth::k0_dn_over_n0: return s + ",depth=k0*dn0/n0";
  }
  return s;
}

std::vector<ParaxialInterpretation> paraxial_interpretations() {
  using P = ParaxialInterpretation;
  std::vector<P> out;
  for (auto d : {P::Depth::k_dn_over_n0, P::Depth::k_dn, P::Depth::k0_dn_over_n0})
    for (auto w : {P::Width::half_width, P::Width::full_width}) out.push_back({w, d});
  return out;
}

ReducedParaxial paraxial_to_reduced(const ParaxialSystem& p, const ParaxialInterpretation& interp,
                                    double half_extent_um, double spacing_um) {
  p.validate();
  ReducedParaxial r;
  r.axis.label = "x";
  switch (interp.depth) {
    case ParaxialInterpretation::Depth::k_dn_over_n0: r.axis.depth = p.k() * p.dn0 / p.n0; break;
    case ParaxialInterpretation::Depth::k_dn: r.axis.depth = p.k() * p.dn0; break;
    case ParaxialInterpretation::Depth::k0_dn_over_n0: r.axis.depth = p.k0() * p.dn0 / p.n0; break;
  }
  r.axis.width = interp.width == ParaxialInterpretation::Width::half_width ? p.sigma_um : 0.5 * p.sigma_um;
  r.axis.half_extent = half_extent_um;
  r.axis.spacing = spacing_um;
  r.convention = KineticConvention::with_coefficient(1.0 / (2.0 * p.k()));
  return r;
}

std::vector<double> beta_per_mm(const Spectrum1D& spectrum) {
  std::vector<double> out;
  for (const auto& s : spectrum.bound_states) out.push_back(-s.energy * 1e3);
  return out;
}

ParaxialSweep paraxial_sweep(const ParaxialSystem& p, const std::vector<double>& published_beta,
                             double half_extent_um, double spacing_um) {
  ParaxialSweep sweep;
  for (const auto& interp : paraxial_interpretations()) {
    ParaxialSweepEntry e;
    e.interpretation = interp;
    double half = half_extent_um;
    for (int attempt = 0;; ++attempt) {
      const auto r = paraxial_to_reduced(p, interp, half, spacing_um);
      try {
        e.beta_per_mm = beta_per_mm(solve_bound_states(r.axis.potential(), r.axis.grid(), r.convention));
        break;
      } catch (const GridTooSmallError&) {
        if (attempt == 3) throw;
        half *= 2.0;
      }
    }
    e.half_extent_um = half;
    if (e.beta_per_mm.size() == published_beta.size()) {
      for (std::size_t k = 0; k < published_beta.size(); ++k)
        e.max_deviation = std::max(e.max_deviation, std::abs(e.beta_per_mm[k] - published_beta[k]));
    } else {
      e.max_deviation = kInf;
    }
    if (e.beta_per_mm.size() == published_beta.size() &&
        (!sweep.selected || e.max_deviation < sweep.entries[*sweep.selected].max_deviation))
      sweep.selected = sweep.entries.size();
    sweep.entries.push_back(std::move(e));
  }
  return sweep;
}

// ---------------------------------------------------------------------------

double ColdAtomUnits::mass_kg() const { return mass_amu * 1.66053906660e-27; }

double ColdAtomUnits::recoil_energy_joule() const {
  constexpr double h = 6.62607015e-34;
  const double lambda = lambda_um * 1e-6;
  return h * h / (2.0 * mass_kg() * lambda * lambda);
}

double ColdAtomUnits::recoil_reduced() const { return reduced_from_joule(recoil_energy_joule()); }

double ColdAtomUnits::reduced_from_joule(double e) const {
  constexpr double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);
  const double x0 = x0_um * 1e-6;
  return 2.0 * mass_kg() * e * x0 * x0 / (hbar * hbar);
}

SeparableSystem coldatom_system(const Config& config) {
  const long sheets = config.get_int("coldatom", "sheets", 3);
  if (sheets < 2 || sheets > 4) throw ValidationError("[coldatom] sheets must be 2..4");
  GaussianAxisSpec a;
  a.depth = config.get_double("coldatom", "total_depth") / static_cast<double>(sheets);
  a.width = config.get_double("coldatom", "width");
  a.half_extent = config.get_double("coldatom", "half_extent");
  a.spacing = config.get_double("coldatom", "spacing");
  const auto sheet = solve_bound_states(a.potential(), a.grid(), KineticConvention::reduced(), {}, "x");
  SeparableSystem sys;
  const char* labels[] = {"x", "y", "z", "w"};
  for (long s = 0; s < sheets; ++s) {
    Spectrum1D copy = sheet;
    copy.axis_label = labels[s];
    if (s > 0)
      for (auto& b : copy.bound_states) b.wavefunction.clear();
    sys.axes.push_back(std::move(copy));
  }
  return sys;
}

ColdAtomSummary coldatom_summary(const Config& config, const SeparableSystem& sys, const BICSearchResult* bics) {
  ColdAtomSummary s;
  const double total = config.get_double("coldatom", "total_depth");
  s.sheet_depth = total / static_cast<double>(sys.dimension());
  s.sheet_width = config.get_double("coldatom", "width");
  s.bound_per_sheet = sys.axes.front().size();
  s.xi_c = continuum_threshold(sys).energy;
  s.state = config.get_indices("coldatom", "state");
  if (s.state.size() != sys.dimension()) throw ValidationError("[coldatom] state needs one index per sheet");
  for (std::size_t a = 0; a < s.state.size(); ++a)
    if (s.state[a] >= sys.axes[a].size()) throw RangeError("[coldatom] state index beyond the bound spectrum");
  s.state_energy = product_energy(sys, s.state);
  s.state_is_bic = s.state_energy > s.xi_c;
  if (bics) s.bic_total = bics->total;
  ColdAtomUnits u;
  u.mass_amu = config.get_double("coldatom", "mass_amu", u.mass_amu);
  u.lambda_um = config.get_double("coldatom", "lambda_um", u.lambda_um);
  u.x0_um = config.get_double("coldatom", "x0_um", u.x0_um);
  s.recoil_reduced = u.recoil_reduced();
  s.depth_in_recoils = total / s.recoil_reduced;
  s.stated_depth_recoils = config.get_double("coldatom", "stated_depth_recoils", 10.0);
  return s;
}

// ---------------------------------------------------------------------------

std::optional<PerturbationSpec> perturbation_from_config(const Config& config, const std::vector<Grid1D>& grids,
                                                         const std::vector<double>& psi_x) {
  const std::string kind = config.get("perturbation", "kind", "none");
  const double lam = config.get_double("perturbation", "strength", 0.0);
  using namespace factors;
  if (kind == "none") return std::nullopt;
  auto need = [&](std::size_t d) {
    if (grids.size() != d) throw ValidationError("perturbation '" + kind + "' needs " + std::to_string(d) + " axes");
  };
  if (kind == "odd_x") {
    need(2);
    return PerturbationSpec{kind, lam, {{1.0, {odd_pair(3.0, 2.0), bump(2.0, 3.0)}}}};
  }
  if (kind == "even_y") {
    need(2);
    return PerturbationSpec{kind, lam, {{1.0, {balanced_pair(0.0, 2.0, 6.0, 4.0, grids[0], psi_x), bump(0.0, 3.0)}}}};
  }
  if (kind == "even_z") {
    need(3);
    return PerturbationSpec{kind, lam, {{1.0, {bump(4.0, 6.0), bump(-3.0, 6.0), even_pair(1.0, 1.5)}}}};
  }
  if (kind == "even_xy") {
    need(3);
    return PerturbationSpec{kind, lam, {{1.0, {even_pair(3.0, 6.0), even_pair(5.0, 6.0), bump(0.7, 1.5)}}}};
  }
  if (kind == "even_all") {
    need(3);
    return PerturbationSpec{kind, lam, {{1.0, {even_pair(3.0, 6.0), even_pair(5.0, 6.0), even_pair(1.0, 1.5)}}}};
  }
  throw ValidationError("unknown perturbation kind '" + kind + "'");
}

namespace {

BICRecord find_record(const SeparableSystem& sys, const std::vector<std::size_t>& state) {
  for (const auto& r : find_bics(sys).records)
    if (r.state.indices == state) return r;
  throw ValidationError("state " + state_label(state) + " is not a BIC of this system");
}

}  // namespace

RadiationRun run_radiation(const Config& config) {
  const auto axes = axes_from_config(config);
  if (axes.size() != 2) throw ValidationError("propagation needs a 2-axis system");
  const auto conv = resolve_convention(config);
  const auto state = config.get_indices("coupling", "state");
  const double h = config.get_double("propagation", "spacing");
  const double e_max = config.get_double("propagation", "e_max", 3.0);

  // Golden rule on large boxes at the propagation spacing.
  std::vector<AxisBasis> bases;
  const double basis_half[2] = {config.get_double("propagation", "basis_half_x"),
                                config.get_double("propagation", "basis_half_y")};
  for (std::size_t a = 0; a < 2; ++a)
    bases.push_back(solve_axis(axes[a].potential(), Grid1D::symmetric(basis_half[a], h), conv, e_max, axes[a].label));
  SeparableSystem sys;
  for (const auto& b : bases) sys.axes.push_back(b.bound);
  const BICRecord bic = find_record(sys, state);

  RadiationRun run;
  run.energy = bic.state.energy;
  run.period = 2.0 * std::numbers::pi / std::abs(run.energy);
  const std::vector<Grid1D> basis_grids{bases[0].bound.grid, bases[1].bound.grid};
  if (auto spec = perturbation_from_config(config, basis_grids, bases[0].bound.bound_states[state[0]].wavefunction)) {
    run.strength = spec->strength;
    run.golden = golden_rule_widths(bic, spec->tabulate(basis_grids), bases);
  }

  // Propagation grid: same spacing, narrower box; initial state solved on it.
  PropagationSetup s;
  s.grid_x = Grid1D::symmetric(config.get_double("propagation", "half_x"), h);
  s.grid_y = Grid1D::symmetric(config.get_double("propagation", "half_y"), h);
  s.convention = conv;
  s.potential_x = axes[0].potential().sample(s.grid_x);
  s.potential_y = axes[1].potential().sample(s.grid_y);
  Eigen1DOptions lax;
  lax.edge_amplitude_tol = 1.0;  // only the BIC's own factors are checked below
  const auto sx = solve_bound_states(axes[0].potential(), s.grid_x, conv, lax, axes[0].label);
  const auto sy = solve_bound_states(axes[1].potential(), s.grid_y, conv, lax, axes[1].label);
  if (state[0] >= sx.size() || state[1] >= sy.size()) throw GridTooSmallError("BIC factors missing on the propagation grid");
  const auto& fx = sx.bound_states[state[0]].wavefunction;
  const auto& fy = sy.bound_states[state[1]].wavefunction;
  if (edge_ratio(fx) > 1e-6 || edge_ratio(fy) > 1e-6)
    throw GridTooSmallError("propagation grid truncates the BIC factors");
  const std::vector<Grid1D> grids{s.grid_x, s.grid_y};
  if (auto spec = perturbation_from_config(config, grids, fx); spec && spec->strength != 0.0)
    s.perturbation = spec->tabulate(grids).field_2d();
  s.ramp_duration = config.get_double("propagation", "ramp", 40.0);
  s.dt = config.get_double("propagation", "dt");
  s.n_steps = static_cast<std::size_t>(std::llround(config.get_double("propagation", "t_end") / s.dt));
  s.sample_every = static_cast<std::size_t>(config.get_int("propagation", "sample_every", 10));
  apply_default_geometry(s);
  s.absorber.enabled = config.get_bool("propagation", "absorber", true);

  std::vector<double> kx, ky;
  for (const auto& c : bic.channels) {
    if (c.n_delocalized() != 1) continue;
    const double k = discrete_momentum(conv, h, run.energy - c.onset);
    (c.delocalized[0] ? kx : ky).push_back(k);
  }
  const double k_fallback = discrete_momentum(conv, h, std::max(run.energy - bic.threshold, 1e-3));
  if (kx.empty()) kx.push_back(k_fallback);
  if (ky.empty()) ky.push_back(k_fallback);
  run.absorber_x = tune_absorber(conv, h, s.absorber.width_x, kx);
  run.absorber_y = tune_absorber(conv, h, s.absorber.width_y, ky);
  s.absorber.strength_x = run.absorber_x.strength;
  s.absorber.strength_y = run.absorber_y.strength;

  ComplexField2D psi = product_field(s.grid_x, fx, s.grid_y, fy, s.grid_x, s.grid_y);
  const ComplexField2D reference = psi;
  run.record = propagate(s, psi, reference);
  run.fit = fit_decay_rate(run.record.times, run.record.survival,
                           config.get_double("propagation", "exclude_fraction", 0.2));
  const double total = run.record.flux_total();
  run.y_fraction = total > 0.0 ? run.record.flux_y() / total : 0.0;
  return run;
}

// ---------------------------------------------------------------------------

std::vector<std::string> scenario_names() { return {"gauss2d", "gauss3d", "paraxial", "coldatom", "tightbinding", "custom"}; }

Config scenario_preset(const std::string& name) {
  Config c;
  c.set("scenario", "name", name);
  if (name == "custom") return c;
  c.set("bics", "max_records", 1000L);
  if (name == "gauss2d") {
    c.set("system", "axes", "x,y");
    c.set("system", "convention", "calibrate");
    const double p[2][2] = {{1.4, 5.0}, {2.2, 4.0}};
    const char* lab[] = {"x", "y"};
    for (int a = 0; a < 2; ++a) {
      const std::string s = std::string("axis.") + lab[a];
      c.set(s, "depth", p[a][0]);
      c.set(s, "width", p[a][1]);
      c.set(s, "center", 0.0);
      c.set(s, "half_extent", 60.0);
      c.set(s, "spacing", 0.05);
    }
    c.set("calibration", "state", "2,1");
    c.set("calibration", "energy", -1.04);
    c.set("calibration", "tolerance", 0.05);
    c.set("coupling", "state", "2,1");
    c.set("coupling", "e_max", 3.0);
    c.set("perturbation", "kind", "none");
    c.set("perturbation", "strength", 0.1);
    c.set("propagation", "enabled", false);
    c.set("propagation", "spacing", 0.4);
    c.set("propagation", "half_x", 40.0);
    c.set("propagation", "half_y", 160.0);
    c.set("propagation", "basis_half_x", 64.0);
    c.set("propagation", "basis_half_y", 140.0);
    c.set("propagation", "e_max", 3.0);
    c.set("propagation", "dt", 0.1);
    c.set("propagation", "t_end", 700.0);
    c.set("propagation", "ramp", 40.0);
    c.set("propagation", "sample_every", 10L);
    c.set("propagation", "exclude_fraction", 0.2);
    c.set("propagation", "absorber", true);
  } else if (name == "gauss3d") {
    c.set("system", "axes", "x,y,z");
    c.set("system", "convention", "calibrate");
    const double p[3][2] = {{0.4, 12.0}, {0.4, 12.0}, {1.0, 3.0}};
    const char* lab[] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
      const std::string s = std::string("axis.") + lab[a];
      c.set(s, "depth", p[a][0]);
      c.set(s, "width", p[a][1]);
      c.set(s, "center", 0.0);
      c.set(s, "half_extent", 120.0);
      c.set(s, "spacing", 0.2);
    }
    c.set("calibration", "state", "1,1,1");
    c.set("calibration", "energy", -0.47);
    c.set_doubles("calibration", "axis.x", {-0.33, -0.20, -0.10, -0.029});
    c.set_doubles("calibration", "axis.y", {-0.33, -0.20, -0.10, -0.029});
    c.set_doubles("calibration", "axis.z", {-0.61, -0.059});
    c.set("calibration", "tolerance", 0.05);
    c.set("coupling", "state", "1,1,1");
    c.set("coupling", "e_max", 1.0);
    c.set("perturbation", "kind", "none");
    c.set("perturbation", "strength", 0.01);
  } else if (name == "paraxial") {
    c.set("paraxial", "n0", 2.3);
    c.set("paraxial", "lambda_um", 0.485);
    c.set("paraxial", "dn0", 5.7e-4);
    c.set("paraxial", "sigma_um", 30.0);
    c.set("paraxial", "interpretation", "sweep");
    c.set_doubles("paraxial", "published_beta", {2.1, 1.3, 0.55, 0.11});
    c.set("paraxial", "half_extent_um", 400.0);
    c.set("paraxial", "spacing_um", 0.25);
  } else if (name == "coldatom") {
    c.set("coldatom", "total_depth", 446.93);
    c.set("coldatom", "sheets", 3L);
    c.set("coldatom", "width", 20.0);
    c.set("coldatom", "half_extent", 340.0);
    c.set("coldatom", "spacing", 0.01);
    c.set("coldatom", "state", "30,96,96");
    c.set("coldatom", "mass_amu", 86.909180527);
    c.set("coldatom", "lambda_um", 1.064);
    c.set("coldatom", "x0_um", 1.0);
    c.set("coldatom", "stated_depth_recoils", 10.0);
    c.set("calibration", "xi_c", -296.24);
    c.set("bics", "max_records", 200L);
  } else if (name == "tightbinding") {
    c.set("lattice", "v", -1.0);
    c.set("lattice", "t", -0.3);
    c.set("lattice", "n", 2L);
    c.set("lattice", "sites", 201L);
    c.set("lattice", "convention", "resolve");
    c.set_doubles("lattice", "targets", {-0.93, -0.74, -0.46, -0.16});
    c.set("lattice", "tolerance", 0.01);
    c.set("lattice", "dense_check", false);
    c.set("lattice", "dense_sites", 61L);
  } else {
    throw ValidationError("unknown scenario '" + name + "'");
  }
  return c;
}

void validate_scenario_config(const Config& config) {
  std::vector<std::string> missing;
  auto need = [&](const std::string& sec, const std::string& key) {
    if (!config.has(sec, key)) missing.push_back("[" + sec + "] " + key);
  };
  need("scenario", "name");
  const std::string name = config.get("scenario", "name", "");
  if (!name.empty()) {
    const auto names = scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ValidationError("unknown scenario '" + name + "'");
  }
  if (name == "gauss2d" || name == "gauss3d" || name == "custom") {
    need("system", "axes");
    need("system", "convention");
    if (config.has("system", "axes"))
      for (const auto& label : split_list(config.get("system", "axes")))
        for (const char* key : {"depth", "width", "half_extent", "spacing"}) need("axis." + label, key);
    else
      missing.push_back("[axis.<label>] depth, width, half_extent, spacing for each axis");
    if (config.get_bool("propagation", "enabled", false)) {
      need("coupling", "state");
      for (const char* key : {"spacing", "half_x", "half_y", "basis_half_x", "basis_half_y", "dt", "t_end"})
        need("propagation", key);
    }
    if (config.get("perturbation", "kind", "none") != "none") need("coupling", "state");
  } else if (name == "paraxial") {
    for (const char* key : {"n0", "lambda_um", "dn0", "sigma_um", "half_extent_um", "spacing_um"}) need("paraxial", key);
  } else if (name == "coldatom") {
    for (const char* key : {"total_depth", "width", "half_extent", "spacing", "state"}) need("coldatom", key);
  } else if (name == "tightbinding") {
    for (const char* key : {"v", "t", "n", "sites"}) need("lattice", key);
  }
  if (!missing.empty()) {
    std::string msg = "missing config keys:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ValidationError(msg);
  }
}

// ---------------------------------------------------------------------------

namespace {

class ScenarioWriter {
 public:
  ScenarioWriter(ScenarioResult& result, const Config& config) : result_(result), config_(config) {}

  OutputTag tag() const { return {result_.config_hash, result_.convention}; }

  void file(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream s;
    fill(s);
    write_text_file((std::filesystem::path(result_.out_dir) / name).string(), s.str());
    result_.files.push_back(name);
  }

  void dump(const std::string& name, const GridDump& d) {
    file(name, [&](std::ostream& o) { write_grid_dump(o, d); });
  }

  template <class F>
  void stage(const std::string& name, F&& body) {
    try {
      body();
      stages_.push_back(name);
    } catch (const ValidationError& e) {
      fail(name, e.what());
      throw ValidationError("stage " + name + ": " + e.what());
    } catch (const RangeError& e) {
      fail(name, e.what());
      throw RangeError("stage " + name + ": " + e.what());
    } catch (const NumericalError& e) {
      fail(name, e.what());
      throw NumericalError("stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
      fail(name, e.what());
      throw std::runtime_error("stage " + name + ": " + e.what());
    }
  }

  void manifest(const std::string& status, const std::string& failed_stage = "", const std::string& error = "") {
    std::ostringstream m;
    m << "scenario=" << result_.name << "\nversion=" << kVersion << "\nconfig_hash=" << result_.config_hash
      << "\nconvention=" << result_.convention << "\nstatus=" << status << '\n';
    if (!failed_stage.empty()) {
      std::string one_line = error;
      std::replace(one_line.begin(), one_line.end(), '\n', ' ');
      m << "failed_stage=" << failed_stage << "\nerror=" << one_line << '\n';
    }
    m << "tolerance.edge_amplitude=1e-06\ntolerance.continuum=1e-09\ntolerance.calibration="
      << config_.get("calibration", "tolerance", "0.05") << "\ntolerance.absorber_reflection=0.001\n";
    for (const auto& s : stages_) m << "stage=" << s << '\n';
    for (const auto& f : result_.files) m << "file=" << f << '\n';
    for (const auto& [k, v] : result_.summary) m << "summary." << k << '=' << v << '\n';
    write_text_file((std::filesystem::path(result_.out_dir) / "manifest.txt").string(), m.str());
  }

 private:
  void fail(const std::string& stage, const std::string& what) { manifest("failed", stage, what); }

  ScenarioResult& result_;
  const Config& config_;
  std::vector<std::string> stages_;
};

void write_bics(ScenarioWriter& w, ScenarioResult& res, const BICSearchResult& bics, const SeparableSystem& sys) {
  w.file("bics.csv", [&](std::ostream& o) { write_bic_catalog_csv(o, bics, w.tag()); });
  w.file("channels.csv", [&](std::ostream& o) { write_channels_csv(o, bics, sys, w.tag()); });
  res.summary["bic_count"] = std::to_string(bics.total);
  res.summary["threshold"] = format_double(bics.threshold.energy);
  std::string protected_list;
  std::size_t n_protected = 0;
  for (const auto& r : bics.records)
    if (r.symmetry_protected && ++n_protected <= 16) protected_list += (protected_list.empty() ? "" : " ") + r.state.label();
  res.summary["symmetry_protected"] = n_protected <= 16 ? protected_list : protected_list + " ...";
  res.summary["symmetry_protected_listed"] = std::to_string(n_protected);
}

BICSearchOptions bic_options(const Config& config) {
  BICSearchOptions o;
  o.max_records = static_cast<std::size_t>(config.get_int("bics", "max_records", 0));
  return o;
}

void run_gaussian(const Config& config, ScenarioWriter& w, ScenarioResult& res) {
  KineticConvention conv;
  w.stage("convention", [&] {
    if (config.get("system", "convention", "reduced") == "calibrate") {
      CalibrationReport rep;
      try {
        conv = resolve_convention(config, &rep);
      } catch (const NumericalError&) {
        res.convention = "uncalibrated";
        throw;
      }
      res.convention = conv.name();
      w.file("calibration.csv", [&](std::ostream& o) {
        o << "# config_hash=" << res.config_hash << "\ncandidate,coefficient,quantity,target,computed,relative_error,selected\n";
        for (std::size_t c = 0; c < rep.candidates.size(); ++c) {
          const auto& cand = rep.candidates[c];
          for (std::size_t k = 0; k < rep.targets.size(); ++k) {
            const double v = cand.computed[k];
            o << cand.convention.name() << ',' << format_double(cand.convention.coefficient()) << ','
              << rep.targets[k].quantity << ',' << format_double(rep.targets[k].value) << ','
              << (std::isnan(v) ? std::string("") : format_double(v)) << ','
              << (std::isnan(v) ? std::string("") : format_double(std::abs(v - rep.targets[k].value) / std::abs(rep.targets[k].value)))
              << ',' << (rep.selected && *rep.selected == c ? 1 : 0) << '\n';
          }
        }
      });
    } else {
      conv = resolve_convention(config);
      res.convention = conv.name();
    }
  });
  const auto axes = axes_from_config(config);
  SeparableSystem sys;
  w.stage("spectra", [&] {
    for (auto& sp : solve_spectra(axes, conv)) sys.axes.push_back(std::move(sp));
    for (const auto& sp : sys.axes) {
      w.file("spectrum_" + sp.axis_label + ".csv", [&](std::ostream& o) { write_spectrum_csv(o, sp, w.tag()); });
      if (config.get_bool("output", "wavefunctions", false)) {
        std::vector<std::size_t> all(sp.size());
        for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
        w.dump("wavefunctions_" + sp.axis_label + ".bin", wavefunction_dump(sp, all, w.tag()));
      }
      std::vector<double> e;
      for (const auto& b : sp.bound_states) e.push_back(b.energy);
      res.summary["levels_" + sp.axis_label] = join(e);
    }
  });
  BICSearchResult bics;
  w.stage("bics", [&] {
    bics = find_bics(sys, bic_options(config));
    write_bics(w, res, bics, sys);
  });
  if (config.get("perturbation", "kind", "none") != "none") {
    w.stage("coupling", [&] {
      const auto state = config.get_indices("coupling", "state");
      std::vector<AxisBasis> bases;
      for (const auto& a : axes)
        bases.push_back(solve_axis(a.potential(), a.grid(), conv, config.get_double("coupling", "e_max", 3.0), a.label));
      SeparableSystem bsys;
      std::vector<Grid1D> grids;
      for (const auto& b : bases) bsys.axes.push_back(b.bound), grids.push_back(b.bound.grid);
      const BICRecord bic = find_record(bsys, state);
      const auto spec = *perturbation_from_config(config, grids, bases[0].bound.bound_states[state[0]].wavefunction);
      const auto pert = spec.tabulate(grids);
      if (axes.size() == 2) {
        const auto rep = golden_rule_widths(bic, pert, bases);
        w.file("coupling.csv", [&](std::ostream& o) { write_coupling_csv(o, rep, w.tag()); });
        res.summary["total_width"] = format_double(rep.total_width);
        for (const auto& [fam, g] : rep.family_width) res.summary["width_" + fam] = format_double(g);
      } else {
        const auto rep = dimensionality_selection(bic, pert, bases);
        w.file("dimensionality.csv", [&](std::ostream& o) { write_dimensionality_csv(o, rep, w.tag()); });
        std::string rad, forb;
        for (const auto& s : rep.radiating) rad += (rad.empty() ? "" : " ") + s;
        for (const auto& s : rep.forbidden) forb += (forb.empty() ? "" : " ") + s;
        res.summary["radiating"] = rad;
        res.summary["forbidden"] = forb;
        res.summary["selection_consistent"] = rep.consistent ? "1" : "0";
      }
    });
  }
  if (config.get_bool("propagation", "enabled", false)) {
    w.stage("propagation", [&] {
      const auto run = run_radiation(config);
      w.file("observables.csv", [&](std::ostream& o) { write_observables_csv(o, run.record, w.tag()); });
      w.file("radiation_long.csv", [&](std::ostream& o) { write_long_csv(o, run.record, w.tag()); });
      w.file("propagation.csv", [&](std::ostream& o) {
        o << "# config_hash=" << res.config_hash << "\nquantity,value\n";
        o << "energy," << format_double(run.energy) << "\nstrength," << format_double(run.strength)
          << "\ngamma_fit," << format_double(run.fit.gamma) << "\nfit_residual," << format_double(run.fit.residual)
          << "\nfit_warning," << (run.fit.quality_warning ? 1 : 0) << "\ngamma_golden_rule,"
          << (run.golden ? format_double(run.golden->total_width) : std::string(""))
          << "\ndirectionality," << format_double(run.record.directionality) << "\ny_fraction,"
          << format_double(run.y_fraction) << "\nmax_bookkeeping_error," << format_double(run.record.max_bookkeeping_error)
          << "\nabsorber_reflection_x," << format_double(run.absorber_x.worst_reflection) << "\nabsorber_reflection_y,"
          << format_double(run.absorber_y.worst_reflection) << "\ndecay_per_period,"
          << format_double(run.fit.gamma * run.period) << '\n';
      });
      res.summary["gamma_fit"] = format_double(run.fit.gamma);
      res.summary["directionality"] = format_double(run.record.directionality);
      if (run.golden) res.summary["gamma_golden_rule"] = format_double(run.golden->total_width);
    });
  }
}

void run_paraxial(const Config& config, ScenarioWriter& w, ScenarioResult& res) {
  ParaxialSystem p;
  p.n0 = config.get_double("paraxial", "n0");
  p.lambda_um = config.get_double("paraxial", "lambda_um");
  p.dn0 = config.get_double("paraxial", "dn0");
  p.sigma_um = config.get_double("paraxial", "sigma_um");
  const double half = config.get_double("paraxial", "half_extent_um");
  const double h = config.get_double("paraxial", "spacing_um");
  const auto published = config.has("paraxial", "published_beta") ? config.get_doubles("paraxial", "published_beta")
                                                                  : std::vector<double>{2.1, 1.3, 0.55, 0.11};
  std::optional<ParaxialInterpretation> chosen;
  double chosen_half = half;
  w.stage("interpretation", [&] {
    p.validate();
    res.convention = KineticConvention::with_coefficient(1.0 / (2.0 * p.k())).name();
    const std::string mode = config.get("paraxial", "interpretation", "sweep");
    const auto sweep = paraxial_sweep(p, published, half, h);
    w.file("paraxial_sweep.csv", [&](std::ostream& o) {
      o << "# config_hash=" << res.config_hash << "\ninterpretation,n_modes,beta_per_mm,max_deviation,selected\n";
      for (std::size_t k = 0; k < sweep.entries.size(); ++k) {
        const auto& e = sweep.entries[k];
        o << e.interpretation.name() << ',' << e.beta_per_mm.size() << ',' << join(e.beta_per_mm) << ','
          << (std::isinf(e.max_deviation) ? std::string("") : format_double(e.max_deviation)) << ','
          << (sweep.selected && *sweep.selected == k ? 1 : 0) << '\n';
      }
    });
    if (mode == "sweep") {
      if (!sweep.selected) throw NumericalError("no paraxial interpretation yields the published mode count");
      chosen = sweep.entries[*sweep.selected].interpretation;
      chosen_half = sweep.entries[*sweep.selected].half_extent_um;
    } else {
      for (const auto& e : sweep.entries)
        if (e.interpretation.name() == mode) chosen = e.interpretation, chosen_half = e.half_extent_um;
      if (!chosen) throw ValidationError("unknown paraxial interpretation '" + mode + "'");
    }
    res.summary["interpretation"] = chosen->name();
  });
  SeparableSystem sys;
  w.stage("spectra", [&] {
    const auto r = paraxial_to_reduced(p, *chosen, chosen_half, h);
    const auto sp = solve_bound_states(r.axis.potential(), r.axis.grid(), r.convention, {}, "x");
    for (const char* label : {"x", "y"}) {
      Spectrum1D copy = sp;
      copy.axis_label = label;
      sys.axes.push_back(copy);
    }
    w.file("spectrum_x.csv", [&](std::ostream& o) { write_spectrum_csv(o, sys.axes[0], w.tag()); });
    w.file("spectrum_y.csv", [&](std::ostream& o) { write_spectrum_csv(o, sys.axes[1], w.tag()); });
    w.file("beta.csv", [&](std::ostream& o) {
      o << "# config_hash=" << res.config_hash << "\n# units: energy and beta_per_um in 1/um, beta_per_mm in 1/mm\n"
        << "n,energy,beta_per_um,beta_per_mm\n";
      for (const auto& b : sp.bound_states)
        o << b.index << ',' << format_double(b.energy) << ',' << format_double(-b.energy) << ','
          << format_double(-b.energy * 1e3) << '\n';
    });
    res.summary["beta_per_mm"] = join(beta_per_mm(sp));
  });
  w.stage("bics", [&] {
    const auto bics = find_bics(sys, bic_options(config));
    write_bics(w, res, bics, sys);
  });
}

void run_coldatom(const Config& config, ScenarioWriter& w, ScenarioResult& res) {
  res.convention = KineticConvention::reduced().name();
  SeparableSystem sys;
  w.stage("spectra", [&] {
    sys = coldatom_system(config);
    w.file("spectrum_sheet.csv", [&](std::ostream& o) { write_spectrum_csv(o, sys.axes[0], w.tag()); });
  });
  BICSearchResult bics;
  w.stage("bics", [&] {
    bics = find_bics(sys, bic_options(config));
    write_bics(w, res, bics, sys);
  });
  w.stage("summary", [&] {
    const auto s = coldatom_summary(config, sys, &bics);
    const double xi_target = config.get_double("calibration", "xi_c", -296.24);
    w.file("coldatom_summary.csv", [&](std::ostream& o) {
      o << "# config_hash=" << res.config_hash << "\nquantity,value\n"
        << "sheet_depth," << format_double(s.sheet_depth) << "\nsheet_width," << format_double(s.sheet_width)
        << "\nbound_per_sheet," << s.bound_per_sheet << "\nxi_c," << format_double(s.xi_c) << "\nxi_c_target,"
        << format_double(xi_target) << "\nstate," << state_label(s.state) << "\nstate_energy,"
        << format_double(s.state_energy) << "\nstate_is_bic," << (s.state_is_bic ? 1 : 0) << "\nbic_total,"
        << s.bic_total << "\nrecoil_reduced," << format_double(s.recoil_reduced) << "\ndepth_in_recoils,"
        << format_double(s.depth_in_recoils) << "\nstated_depth_recoils," << format_double(s.stated_depth_recoils)
        << '\n';
    });
    res.summary["bound_per_sheet"] = std::to_string(s.bound_per_sheet);
    res.summary["xi_c"] = format_double(s.xi_c);
    res.summary["state_energy"] = format_double(s.state_energy);
    res.summary["depth_in_recoils"] = format_double(s.depth_in_recoils);
    res.summary["stated_depth_recoils"] = format_double(s.stated_depth_recoils);
    res.summary["xi_c_consistent"] = std::abs(s.xi_c - xi_target) <= 0.5 ? "1" : "0";
  });
}

void run_tightbinding(const Config& config, ScenarioWriter& w, ScenarioResult& res) {
  const double v = config.get_double("lattice", "v"), t = config.get_double("lattice", "t");
  const int n = static_cast<int>(config.get_int("lattice", "n"));
  const auto sites = static_cast<std::size_t>(config.get_int("lattice", "sites"));
  LatticeConvention conv;
  w.stage("convention", [&] {
    const std::string mode = config.get("lattice", "convention", "resolve");
    if (mode == "resolve") {
      const auto rep = resolve_lattice_convention(v, t, n, config.get_doubles("lattice", "targets"),
                                                  config.get_double("lattice", "tolerance", 0.01), sites);
      w.file("lattice_conventions.csv", [&](std::ostream& o) {
        o << "# config_hash=" << res.config_hash << "\nconvention,n_bound,energies,max_deviation,matches,selected\n";
        for (std::size_t k = 0; k < rep.candidates.size(); ++k) {
          const auto& c = rep.candidates[k];
          o << c.convention.name() << ',' << c.energies.size() << ',' << join(c.energies) << ','
            << (std::isinf(c.max_deviation) ? std::string("") : format_double(c.max_deviation)) << ','
            << (c.matches ? 1 : 0) << ',' << (rep.selected && *rep.selected == k ? 1 : 0) << '\n';
        }
      });
      conv = rep.chosen().convention;
    } else {
      conv = LatticeConvention::parse(mode);
    }
    res.convention = conv.name();
  });
  const TightBindingChain cx{v, t, n, sites, conv, "x"}, cy{v, t, n, sites, conv, "y"};
  SeparableSystem sys;
  w.stage("spectra", [&] {
    sys.axes.push_back(chain_bound_states(cx).as_axis(cx));
    sys.axes.push_back(chain_bound_states(cy).as_axis(cy));
    for (const auto& sp : sys.axes)
      w.file("spectrum_" + sp.axis_label + ".csv", [&](std::ostream& o) { write_spectrum_csv(o, sp, w.tag()); });
    std::vector<double> e;
    for (const auto& b : sys.axes[0].bound_states) e.push_back(b.energy);
    res.summary["levels"] = join(e);
  });
  w.stage("bics", [&] {
    const auto bics = find_bics(sys, bic_options(config));
    write_bics(w, res, bics, sys);
  });
  if (config.get_bool("lattice", "dense_check", false)) {
    w.stage("dense_check", [&] {
      const auto m = static_cast<std::size_t>(config.get_int("lattice", "dense_sites", 61));
      const TightBindingChain dx{v, t, n, m, conv, "x"}, dy{v, t, n, m, conv, "y"};
      const auto chk = lattice_dense_check(dx, dy);
      w.file("lattice_dense.csv", [&](std::ostream& o) {
        o << "# config_hash=" << res.config_hash << "\nsites,max_spectrum_deviation,max_bic_deviation\n"
          << chk.sites << ',' << format_double(chk.max_spectrum_deviation) << ','
          << format_double(chk.max_bic_deviation) << '\n';
      });
      res.summary["dense_max_deviation"] = format_double(std::max(chk.max_spectrum_deviation, chk.max_bic_deviation));
    });
  }
}

}  // namespace

ScenarioResult run_scenario(const Config& config, const std::string& out_dir) {
  validate_scenario_config(config);
  ScenarioResult res;
  res.name = config.get("scenario", "name");
  res.out_dir = out_dir;
  res.config_hash = config.hash_hex();
  std::filesystem::create_directories(out_dir);
  ScenarioWriter w(res, config);
  w.file("config.ini", [&](std::ostream& o) { o << config.serialize(); });
  if (res.name == "paraxial") run_paraxial(config, w, res);
  else if (res.name == "coldatom") run_coldatom(config, w, res);
  else if (res.name == "tightbinding") run_tightbinding(config, w, res);
  else run_gaussian(config, w, res);
  w.manifest("ok");
  return res;
}

}  // namespace sepbic
