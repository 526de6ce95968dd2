// Acceptance checks: `acceptance <n>` runs criterion n (1..10), `acceptance all`
// runs every criterion. Each prints one PASS/FAIL line; exit status 1 on FAIL.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "sepbic/dense.hpp"
#include "sepbic/errors.hpp"
#include "sepbic/kinetic.hpp"
#include "sepbic/lattice.hpp"
#include "sepbic/scenarios.hpp"
#include "sepbic/tridiagonal.hpp"

using namespace sepbic;

namespace {

using Index = std::vector<std::size_t>;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const BICRecord* record_of(const BICSearchResult& r, const Index& idx) {
  for (const auto& b : r.records)
    if (b.state.indices == idx) return &b;
  return nullptr;
}

SeparableSystem gaussian_system(const Config& cfg, KineticConvention conv) {
  SeparableSystem sys;
  for (const auto& a : axes_from_config(cfg))
    sys.axes.push_back(solve_bound_states(a.potential(), a.grid(), conv, {}, a.label));
  return sys;
}

std::set<Index> index_set(const BICSearchResult& r, bool protected_only = false) {
  std::set<Index> out;
  for (const auto& b : r.records)
    if (!protected_only || b.symmetry_protected) out.insert(b.state.indices);
  return out;
}

const std::set<Index> kEightBICs{{1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3}, {3, 2}, {2, 2}, {3, 3}};
const std::set<Index> kSixLatticeBICs{{2, 2}, {2, 3}, {3, 2}, {3, 3}, {3, 1}, {1, 3}};
const std::set<Index> kProtected{{1, 3}, {3, 1}};

// 1. 2D Gaussian |2,1>: E = -1.04 +- 0.01, even in x, odd in y, two channel families.
void criterion1(Verdict& v) {
  const auto cfg = scenario_preset("gauss2d");
  CalibrationReport rep;
  const auto conv = resolve_convention(cfg, &rep);
  const auto sys = gaussian_system(cfg, conv);
  const auto bics = find_bics(sys);
  const auto* r = record_of(bics, {2, 1});
  v.detail << "convention=" << conv.name();
  v.require(r != nullptr, "|2,1> certified as a BIC");
  if (!r) return;
  v.detail << " E=" << num(r->state.energy) << " threshold=" << num(r->threshold);
  v.require(std::abs(r->state.energy + 1.04) <= 0.01, "E within -1.04 +- 0.01");
  v.require(r->state.energy > r->threshold, "E above threshold");
  v.require(sys.axes[0].bound_states[2].parity == Parity::even, "even in x");
  v.require(sys.axes[1].bound_states[1].parity == Parity::odd, "odd in y");
  std::set<std::string> families;
  for (const auto& c : r->channels) families.insert(c.label(sys));
  v.detail << " channels=" << r->channels.size();
  for (const auto& f : families) v.detail << ' ' << f;
  v.require(r->channels.size() == 2 && families == std::set<std::string>{"|Ex,0>", "|0,Ey>"},
            "exactly the channels |Ex,0> and |0,Ey>");
}

// 2. 3D Gaussian levels +- 0.01, |1,1,1> at -0.47 +- 0.01 with six channel families.
void criterion2(Verdict& v) {
  const auto cfg = scenario_preset("gauss3d");
  const auto conv = resolve_convention(cfg);
  const auto sys = gaussian_system(cfg, conv);
  const std::vector<std::vector<double>> levels{{-0.33, -0.20, -0.10, -0.029}, {-0.33, -0.20, -0.10, -0.029}, {-0.61, -0.059}};
  double worst = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    v.require(sys.axes[a].size() == levels[a].size(), "bound count on axis " + sys.axes[a].axis_label);
    for (std::size_t n = 0; n < std::min(levels[a].size(), sys.axes[a].size()); ++n)
      worst = std::max(worst, std::abs(sys.axes[a].energy(n) - levels[a][n]));
  }
  v.detail << "convention=" << conv.name() << " max_level_dev=" << num(worst);
  v.require(worst <= 0.01, "1D levels within 0.01");
  const auto bics = find_bics(sys);
  const auto* r = record_of(bics, {1, 1, 1});
  v.require(r != nullptr, "|1,1,1> certified as a BIC");
  if (!r) return;
  v.detail << " E111=" << num(r->state.energy);
  v.require(std::abs(r->state.energy + 0.47) <= 0.01, "E111 within -0.47 +- 0.01");
  // Families: z-delocalized with (nx, ny) fixed; x, y or xy delocalized with z in 0.
  std::set<std::string> families;
  for (const auto& c : r->channels) {
    if (c.delocalized[2]) {
      v.require(c.n_delocalized() == 1, "no mixed z channels");
      families.insert("|" + std::to_string(*c.bound_index[0]) + "," + std::to_string(*c.bound_index[1]) + ",Ez>");
    } else {
      v.require(*c.bound_index[2] == 0, "in-plane channels have z in its ground state");
      families.insert(c.delocalized[0] && c.delocalized[1] ? "|Ex,Ey,0>" : c.delocalized[0] ? "|Ex,m,0>" : "|n,Ey,0>");
    }
  }
  const std::set<std::string> expected{"|0,0,Ez>", "|0,1,Ez>", "|1,0,Ez>", "|Ex,m,0>", "|n,Ey,0>", "|Ex,Ey,0>"};
  v.detail << " families=" << families.size();
  v.require(families == expected, "the six listed channel families");
}

// 3. Cold atoms: 138 bound states, xi_c = -296.24 +- 0.5, E(|30,96,96>) = -146.62 +- 0.5.
void criterion3(Verdict& v) {
  const auto cfg = scenario_preset("coldatom");
  const auto sys = coldatom_system(cfg);
  const auto s = coldatom_summary(cfg, sys, nullptr);
  v.detail << "bound=" << s.bound_per_sheet << " xi_c=" << num(s.xi_c) << " E(30,96,96)=" << num(s.state_energy)
           << " depth=" << num(s.depth_in_recoils) << " E_r (stated " << num(s.stated_depth_recoils) << ")";
  v.require(s.bound_per_sheet == 138, "138 bound states per sheet");
  v.require(std::abs(s.xi_c + 296.24) <= 0.5, "xi_c within 0.5");
  v.require(std::abs(s.state_energy + 146.62) <= 0.5, "E(|30,96,96>) within -146.62 +- 0.5");
}

// 4. Tight binding: energies +- 0.01, the six BICs, |3,1> and |1,3> protected.
void criterion4(Verdict& v) {
  const std::vector<double> targets{-0.93, -0.74, -0.46, -0.16};
  const auto res = resolve_lattice_convention(-1.0, -0.3, 2, targets, 0.01, 201);
  v.require(res.selected.has_value(), "a convention reproduces the energies");
  if (!res.selected) return;
  const auto& cand = res.chosen();
  double worst = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) worst = std::max(worst, std::abs(cand.energies[k] - targets[k]));
  v.detail << "convention=" << cand.convention.name() << " max_dev=" << num(worst);
  v.require(cand.energies.size() == 4 && worst <= 0.01, "four energies within 0.01");
  const TightBindingChain cx{-1.0, -0.3, 2, 201, cand.convention, "x"}, cy{-1.0, -0.3, 2, 201, cand.convention, "y"};
  const auto bics = lattice_find_bics(cx, cy);
  v.detail << " bics=" << bics.records.size();
  v.require(index_set(bics) == kSixLatticeBICs, "exactly the six published BICs");
  v.require(index_set(bics, true) == kProtected, "|3,1> and |1,3> symmetry-protected");
}

// 5. Paraxial: eight BICs with |1,3>, |3,1> protected under the interpretation sweep.
void criterion5(Verdict& v) {
  const auto cfg = scenario_preset("paraxial");
  ParaxialSystem p;
  const auto sweep = paraxial_sweep(p, cfg.get_doubles("paraxial", "published_beta"),
                                    cfg.get_double("paraxial", "half_extent_um"), cfg.get_double("paraxial", "spacing_um"));
  v.require(sweep.selected.has_value(), "an interpretation with four modes");
  if (!sweep.selected) return;
  const auto& e = sweep.entries[*sweep.selected];
  v.detail << "interpretation=" << e.interpretation.name() << " beta_per_mm=";
  for (double b : e.beta_per_mm) v.detail << num(b) << ' ';
  v.detail << "(reported, not gated; max_dev=" << num(e.max_deviation) << ")";
  const auto r = paraxial_to_reduced(p, e.interpretation, e.half_extent_um, cfg.get_double("paraxial", "spacing_um"));
  const auto sp = solve_bound_states(r.axis.potential(), r.axis.grid(), r.convention, {}, "x");
  Spectrum1D sy = sp;
  sy.axis_label = "y";
  const auto bics = find_bics(SeparableSystem{{sp, sy}});
  v.detail << " bics=" << bics.records.size();
  v.require(index_set(bics) == kEightBICs, "the eight published BICs");
  v.require(index_set(bics, true) == kProtected, "|1,3> and |3,1> symmetry-protected");
}

Config radiation_config(const std::string& kind, double strength) {
  auto cfg = scenario_preset("gauss2d");
  cfg.set("perturbation", "kind", kind);
  cfg.set("perturbation", "strength", strength);
  cfg.set("propagation", "enabled", true);
  return cfg;
}

// 6. Directionality: even-y gives Gamma_x = 0 and x-flux fraction <= 1e-2;
//    odd-x gives first-order Gamma_y = 0 and y-flux fraction ~ lambda^2.
void criterion6(Verdict& v) {
  const auto ey = run_radiation(radiation_config("even_y", 0.11));
  const auto& gy = *ey.golden;
  bool x_zero_by_parity = false;
  for (const auto& c : gy.channels)
    if (c.family == "x") x_zero_by_parity = c.selection_rule_zero && c.width == 0.0;
  const double x_fraction = 1.0 - ey.y_fraction;
  v.detail << "even_y: Gamma_x=" << num(gy.width_for("x")) << " x_flux_fraction=" << num(x_fraction);
  v.require(x_zero_by_parity && gy.width_for("x") == 0.0, "even-y Gamma_x = 0 by parity");
  v.require(x_fraction <= 1e-2, "even-y x-flux fraction <= 1e-2");

  const auto o1 = run_radiation(radiation_config("odd_x", 0.1));
  const auto o2 = run_radiation(radiation_config("odd_x", 0.01));
  bool y_zero_by_parity = false;
  for (const auto& c : o1.golden->channels)
    if (c.family == "y") y_zero_by_parity = c.selection_rule_zero && c.width == 0.0;
  const double slope = std::log(o1.y_fraction / o2.y_fraction) / std::log(10.0);
  v.detail << "; odd_x: Gamma_y=" << num(o1.golden->width_for("y")) << " y_fraction(0.1)=" << num(o1.y_fraction)
           << " y_fraction(0.01)=" << num(o2.y_fraction) << " slope=" << num(slope);
  v.require(y_zero_by_parity && o1.golden->width_for("y") == 0.0, "odd-x first-order Gamma_y = 0");
  v.require(std::abs(slope - 2.0) <= 0.3, "parity-forbidden flux slope 2 +- 0.3");
}

// 7. Golden rule vs TDSE: fit within 20% of 2 pi |M|^2 rho; Gamma(2 lambda) / Gamma(lambda) = 4 +- 10%.
void criterion7(Verdict& v) {
  const auto a = run_radiation(radiation_config("even_y", 0.055));
  const auto b = run_radiation(radiation_config("even_y", 0.11));
  const double ea = std::abs(a.fit.gamma - a.golden->total_width) / a.golden->total_width;
  const double eb = std::abs(b.fit.gamma - b.golden->total_width) / b.golden->total_width;
  const double ratio = b.fit.gamma / a.fit.gamma;
  v.detail << "lambda=0.055: fit=" << num(a.fit.gamma) << " golden=" << num(a.golden->total_width) << " rel=" << num(ea)
           << "; lambda=0.11: fit=" << num(b.fit.gamma) << " golden=" << num(b.golden->total_width) << " rel=" << num(eb)
           << "; ratio=" << num(ratio) << " decay/period=" << num(b.fit.gamma * b.period);
  v.require(ea <= 0.2 && eb <= 0.2, "fit within 20% of the golden rule");
  v.require(std::abs(ratio / 4.0 - 1.0) <= 0.1, "Gamma(2 lambda)/Gamma(lambda) = 4 +- 10%");
  v.require(b.fit.gamma * b.period < 1e-2, "perturbative regime (decay per period < 1%)");
}

// 8. Separability oracle on a 45 x 45 grid.
void criterion8(Verdict& v) {
  const auto conv = KineticConvention::reduced();
  Eigen1DOptions loose;
  loose.edge_amplitude_tol = 1.0;
  loose.potential_edge_tol = 1.0;
  const Grid1D gx = Grid1D::symmetric(11.0, 0.5), gy = Grid1D::symmetric(10.0, 0.45);
  const auto px = Potential1D::gaussian_well(1.4, 5.0), py = Potential1D::gaussian_well(2.2, 4.0);
  const auto vx = px.sample(gx), vy = py.sample(gy);
  RealField2D pot(gx, gy);
  for (std::size_t j = 0; j < gy.size(); ++j)
    for (std::size_t i = 0; i < gx.size(); ++i) pot(i, j) = vx[i] + vy[j];
  const auto ex = eigenvalues(build_hamiltonian(gx, vx, conv), EigenSelection::all());
  const auto ey = eigenvalues(build_hamiltonian(gy, vy, conv), EigenSelection::all());
  std::vector<double> sum;
  for (double a : ex)
    for (double b : ey) sum.push_back(a + b);
  std::sort(sum.begin(), sum.end());
  const auto dense_values = dense_diagonalize_2d(pot, conv).values;
  double worst = 0.0;
  for (std::size_t k = 0; k < sum.size(); ++k) worst = std::max(worst, std::abs(sum[k] - dense_values[k]));
  v.detail << "grid=" << gx.size() << "x" << gy.size() << " max_spectrum_dev=" << num(worst);
  v.require(dense_values.size() == sum.size() && worst <= 1e-10, "dense spectrum = tensor sum to 1e-10");

  const SeparableSystem sys{{solve_bound_states(px, gx, conv, loose, "x"), solve_bound_states(py, gy, conv, loose, "y")}};
  const auto bics = find_bics(sys);
  v.require(!bics.records.empty(), "BICs on the coarse grid");
  if (bics.records.empty()) return;
  auto index_of = [&](double e) {
    return static_cast<std::size_t>(std::lower_bound(dense_values.begin(), dense_values.end(), e - 1e-9) -
                                    dense_values.begin());
  };
  std::size_t last = index_of(bics.records.back().state.energy);
  while (last < dense_values.size() && std::abs(dense_values[last] - bics.records.back().state.energy) < 1e-9) ++last;
  const auto full = dense_diagonalize_2d(pot, conv, index_of(bics.records.front().state.energy), last);
  const double w = std::sqrt(gx.spacing() * gy.spacing());
  double worst_overlap = 1.0;
  for (const auto& r : bics.records) {
    std::size_t lo = index_of(r.state.energy), hi = lo;
    while (hi < dense_values.size() && std::abs(dense_values[hi] - r.state.energy) < 1e-9) ++hi;
    const auto prod = product_wavefunction_2d(sys, r.state);
    double overlap2 = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& u = full.vectors[k - full.vector_first_index];
      double d = 0.0;
      for (std::size_t q = 0; q < u.size(); ++q) d += w * prod[q] * u[q];
      overlap2 += d * d;
    }
    worst_overlap = std::min(worst_overlap, overlap2);
  }
  v.detail << " bics=" << bics.records.size() << " min_overlap2=1-" << num(1.0 - worst_overlap);
  v.require(worst_overlap > 1.0 - 1e-10, "BIC overlap^2 > 1 - 1e-10");
}

// 9. Unperturbed survival over 50 periods with absorbers; unitarity without absorber.
void criterion9(Verdict& v) {
  auto cfg = radiation_config("none", 0.0);
  const double period = 2.0 * std::numbers::pi / 1.053;
  cfg.set("propagation", "t_end", std::ceil(50.0 * period));
  const auto still = run_radiation(cfg);
  const double min_survival = *std::min_element(still.record.survival.begin(), still.record.survival.end());
  v.detail << "T=" << num(still.record.times.back()) << " (" << num(still.record.times.back() / still.period)
           << " periods) min_survival=1-" << num(1.0 - min_survival);
  v.require(still.record.times.back() >= 50.0 * still.period, "50 periods covered");
  v.require(min_survival >= 1.0 - 1e-4, "survival >= 1 - 1e-4");

  auto closed = radiation_config("odd_x", 0.1);
  closed.set("propagation", "absorber", false);
  closed.set("propagation", "t_end", 100.0);
  const auto run = run_radiation(closed);
  const double drift = std::abs(run.record.total_norm.back() - run.record.total_norm.front());
  v.detail << "; steps=1000 norm_drift=" << num(drift);
  v.require(drift <= 1e-10, "|dnorm| <= 1e-10 per 1000 steps");
}

// 10. 3D dimensionality selection at the matrix-element level.
void criterion10(Verdict& v) {
  const auto cfg = scenario_preset("gauss3d");
  const auto conv = resolve_convention(cfg);
  std::vector<AxisBasis> bases;
  std::vector<Grid1D> grids;
  for (const auto& a : axes_from_config(cfg)) {
    bases.push_back(solve_axis(a.potential(), a.grid(), conv, cfg.get_double("coupling", "e_max"), a.label));
    grids.push_back(bases.back().bound.grid);
  }
  SeparableSystem sys;
  for (const auto& b : bases) sys.axes.push_back(b.bound);
  const auto bics = find_bics(sys);
  const auto* bic = record_of(bics, {1, 1, 1});
  v.require(bic != nullptr, "|1,1,1> is a BIC");
  if (!bic) return;
  const BICRecord rec = *bic;
  for (const std::string kind : {"even_z", "even_xy"}) {
    auto c = cfg;
    c.set("perturbation", "kind", kind);
    c.set("perturbation", "strength", 0.01);
    const auto spec = *perturbation_from_config(c, grids, {});
    const auto rep = dimensionality_selection(rec, spec.tabulate(grids), bases);
    double forbidden_max = 0.0, radiating_min = 1.0;
    for (const auto& ch : rep.channels) {
      const bool z = ch.channel.delocalized[2];
      const bool should_vanish = kind == "even_z" ? !z : z;
      if (should_vanish) {
        forbidden_max = std::max(forbidden_max, ch.max_relative_element);
        v.require(ch.predicted_forbidden, kind + " predicts " + ch.label + " forbidden");
      } else if (!ch.predicted_forbidden) {
        radiating_min = std::min(radiating_min, ch.max_relative_element);
      }
    }
    v.detail << kind << ": forbidden_max=" << num(forbidden_max) << " radiating_min=" << num(radiating_min) << "; ";
    v.require(forbidden_max < 1e-12, kind + " forbidden elements < 1e-12 relative");
    v.require(radiating_min > 1e-6, kind + " parity-allowed channels radiate");
    v.require(rep.consistent, kind + " parity prediction matches every element");
  }
}

const std::vector<std::function<void(Verdict&)>> kCriteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                            criterion6, criterion7, criterion8, criterion9, criterion10};

bool run(std::size_t n) {
  Verdict v;
  try {
    kCriteria[n - 1](v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail.str() << std::endl;
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <1-" << kCriteria.size() << "|all>\n";
    return 2;
  }
  const std::string arg = argv[1];
  bool ok = true;
  if (arg == "all") {
    for (std::size_t n = 1; n <= kCriteria.size(); ++n) ok = run(n) && ok;
  } else {
    const auto n = static_cast<std::size_t>(std::atoi(arg.c_str()));
    if (n < 1 || n > kCriteria.size()) {
      std::cerr << "unknown criterion '" << arg << "'\n";
      return 2;
    }
    ok = run(n);
  }
  return ok ? 0 : 1;
}
