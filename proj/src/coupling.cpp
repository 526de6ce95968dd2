#include "sepbic/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sepbic/quadrature.hpp"

namespace sepbic {

namespace factors {

namespace {
double gauss(double u, double s) { return std::exp(-(u * u) / (s * s)); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace

FactorSpec bump(double center, double width) {
  if (!(width > 0.0)) throw ValidationError("bump width must be positive");
  return {[=](double x) { return gauss(x - center, width); }, center == 0.0 ? Parity::even : Parity::none,
          "bump(" + fmt(center) + "," + fmt(width) + ")"};
}

FactorSpec even_pair(double offset, double width) {
  if (!(width > 0.0)) throw ValidationError("bump width must be positive");
  return {[=](double x) { return gauss(x - offset, width) + gauss(x + offset, width); }, Parity::even,
          "even_pair(" + fmt(offset) + "," + fmt(width) + ")"};
}

FactorSpec odd_pair(double offset, double width) {
  if (!(width > 0.0)) throw ValidationError("bump width must be positive");
  if (offset == 0.0) throw ValidationError("odd_pair needs a nonzero offset");
  return {[=](double x) { return gauss(x - offset, width) - gauss(x + offset, width); }, Parity::odd,
          "odd_pair(" + fmt(offset) + "," + fmt(width) + ")"};
}

FactorSpec constant(double value) {
  return {[=](double) { return value; }, Parity::even, "const(" + fmt(value) + ")"};
}

FactorSpec balanced_pair(double a1, double s1, double a2, double s2, const Grid1D& grid,
                         std::span<const double> psi) {
  if (!(s1 > 0.0 && s2 > 0.0)) throw ValidationError("bump width must be positive");
  if (psi.size() != grid.size()) throw ValidationError("balanced_pair: wavefunction does not match grid");
  std::vector<double> g1(grid.size()), g2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    g1[i] = gauss(grid[i] - a1, s1);
    g2[i] = gauss(grid[i] - a2, s2);
  }
  const double m1 = integrate_product(grid, psi, g1, psi);
  const double m2 = integrate_product(grid, psi, g2, psi);
  if (std::abs(m2) < 1e-300) throw ValidationError("balanced_pair: second bump does not overlap the state");
  const double w = m1 / m2;
  return {[=](double x) { return gauss(x - a1, s1) - w * gauss(x - a2, s2); }, Parity::none,
          "balanced_pair(" + fmt(a1) + "," + fmt(s1) + ";" + fmt(a2) + "," + fmt(s2) + ";w=" + fmt(w) + ")"};
}

}  // namespace factors

namespace {

double peak(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void verify_parity(const Grid1D& grid, const std::vector<double>& f, Parity p, const std::string& what) {
  if (p == Parity::none || !grid.is_symmetric()) return;
  const double sign = p == Parity::even ? 1.0 : -1.0;
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] - sign * f[grid.mirror(i)];
    diff += d * d;
    norm += f[i] * f[i];
  }
  if (std::sqrt(diff) > 1e-10 * std::sqrt(norm))
    throw ValidationError("perturbation factor " + what + " is not " + to_string(p) + " on its grid");
}

const std::string kAxisNames[] = {"x", "y", "z", "w"};

std::string axis_name(std::size_t i) { return i < 4 ? kAxisNames[i] : "a" + std::to_string(i); }

std::string family_of(const ContinuumChannel& ch) {
  std::string s;
  for (std::size_t i = 0; i < ch.delocalized.size(); ++i)
    if (ch.delocalized[i]) s += axis_name(i);
  return s;
}

double norm2(const Grid1D& g, std::span<const double> a) { return std::sqrt(integrate_product(g, a, a)); }

void check_bases(const Perturbation& pert, const std::vector<AxisBasis>& bases) {
  if (bases.size() != pert.dimension()) throw ValidationError("perturbation and bases differ in dimension");
  for (std::size_t i = 0; i < bases.size(); ++i)
    if (!bases[i].bound.grid.same_as(pert.grids[i]))
      throw ValidationError("perturbation grid does not match basis grid on axis " + axis_name(i));
}

// Per-term, per-axis 1D integrals and bound on their magnitude.
struct AxisIntegrals {
  std::vector<double> value;  // per term
  std::vector<double> scale;  // per term: max|f| * |bra| * |ket|
};

AxisIntegrals axis_integrals(const Perturbation& pert, std::size_t axis, std::span<const double> bra,
                             std::span<const double> ket) {
  const Grid1D& g = pert.grids[axis];
  AxisIntegrals out;
  const double nb = norm2(g, bra), nk = norm2(g, ket);
  for (const auto& t : pert.terms) {
    out.value.push_back(integrate_product(g, bra, t.factors[axis], ket));
    out.scale.push_back(peak(t.factors[axis]) * nb * nk);
  }
  return out;
}

// Continuum states of one axis grouped by parity class (ascending energy).
std::map<Parity, std::vector<const ContinuumState*>> parity_classes(const BoxContinuumSet& set) {
  std::map<Parity, std::vector<const ContinuumState*>> out;
  for (const auto& s : set.states) out[set.symmetric ? s.parity : Parity::none].push_back(&s);
  return out;
}

// Box-normalized factor for a stored state: |M_box|^2 = |M_stored|^2 * box_factor.
double box_factor(const BoxContinuumSet& set, const ContinuumState& s) {
  return set.normalization == BoxContinuumSet::Normalization::energy ? s.spacing : 1.0;
}
double energy_factor(const BoxContinuumSet& set, const ContinuumState& s) {
  return set.normalization == BoxContinuumSet::Normalization::energy ? 1.0 : 1.0 / s.spacing;
}

struct ChannelGeometry {
  std::vector<std::size_t> deloc;
  double bound_energy = 0.0;  // sum of bound energies on bound axes
};

ChannelGeometry geometry(const ContinuumChannel& ch, const std::vector<AxisBasis>& bases) {
  ChannelGeometry g;
  for (std::size_t i = 0; i < ch.delocalized.size(); ++i) {
    if (ch.delocalized[i])
      g.deloc.push_back(i);
    else
      g.bound_energy += bases[i].bound.energy(*ch.bound_index[i]);
  }
  return g;
}

// Product of per-axis factors over bound axes for each term.
std::vector<double> bound_part(const Perturbation& pert, const BICRecord& bic, const ContinuumChannel& ch,
                               const std::vector<AxisBasis>& bases, std::vector<double>* scale) {
  std::vector<double> prod(pert.terms.size(), 1.0);
  if (scale) scale->assign(pert.terms.size(), 1.0);
  for (std::size_t i = 0; i < ch.delocalized.size(); ++i) {
    if (ch.delocalized[i]) continue;
    const auto& bra = bases[i].bound.bound_states.at(*ch.bound_index[i]).wavefunction;
    const auto& ket = bases[i].bound.bound_states.at(bic.state.indices[i]).wavefunction;
    const auto ai = axis_integrals(pert, i, bra, ket);
    for (std::size_t t = 0; t < prod.size(); ++t) {
      prod[t] *= ai.value[t];
      if (scale) (*scale)[t] *= ai.scale[t];
    }
  }
  return prod;
}

std::optional<std::size_t> channel_forbidden_axis(const Perturbation& pert, const BICRecord& bic,
                                                  const ContinuumChannel& ch) {
  std::vector<Parity> bra(ch.parity), ket(bic.state.parities);
  for (std::size_t i = 0; i < ch.delocalized.size(); ++i)
    if (ch.delocalized[i]) bra[i] = ket[i] = Parity::none;
  return parity_forbidden_axis(pert, bra, ket);
}

}  // namespace

Perturbation PerturbationSpec::tabulate(const std::vector<Grid1D>& grids) const {
  if (terms.empty()) throw ValidationError("perturbation has no terms");
  Perturbation p;
  p.name = name;
  p.strength = strength;
  p.grids = grids;
  for (const auto& t : terms) {
    if (t.factors.size() != grids.size())
      throw ValidationError("perturbation term has " + std::to_string(t.factors.size()) + " factors for " +
                            std::to_string(grids.size()) + " axes");
    PerturbationTerm pt;
    pt.amplitude = t.amplitude;
    for (std::size_t i = 0; i < grids.size(); ++i) {
      std::vector<double> f(grids[i].size());
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = t.factors[i].f(grids[i][k]);
      verify_parity(grids[i], f, t.factors[i].parity, t.factors[i].description);
      pt.factors.push_back(std::move(f));
      pt.parity.push_back(t.factors[i].parity);
    }
    p.terms.push_back(std::move(pt));
  }
  return p;
}

PerturbationSpec PerturbationSpec::scaled(double factor) const {
  PerturbationSpec s = *this;
  s.strength *= factor;
  return s;
}

Parity Perturbation::parity_on(std::size_t axis) const {
  if (terms.empty()) return Parity::none;
  const Parity p = terms.front().parity.at(axis);
  for (const auto& t : terms)
    if (t.parity.at(axis) != p) return Parity::none;
  return p;
}

RealField2D Perturbation::field_2d() const {
  if (dimension() != 2) throw ValidationError("field_2d needs a two-axis perturbation");
  RealField2D out(grids[0], grids[1]);
  for (const auto& t : terms)
    for (std::size_t j = 0; j < grids[1].size(); ++j) {
      const double fy = strength * t.amplitude * t.factors[1][j];
      if (fy == 0.0) continue;
      for (std::size_t i = 0; i < grids[0].size(); ++i) out(i, j) += fy * t.factors[0][i];
    }
  return out;
}

SeparableState bound_product_state(const std::vector<AxisBasis>& bases, const ProductState& state) {
  if (bases.size() != state.indices.size()) throw ValidationError("state and bases differ in dimension");
  SeparableState s;
  for (std::size_t i = 0; i < bases.size(); ++i) s.push_back(bases[i].bound.bound_states.at(state.indices[i]).wavefunction);
  return s;
}

double matrix_element(const SeparableState& bra, const Perturbation& pert, const SeparableState& ket) {
  const std::size_t n = pert.dimension();
  if (bra.size() != n || ket.size() != n) throw ValidationError("matrix_element: state dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (bra[i].size() != pert.grids[i].size() || ket[i].size() != pert.grids[i].size())
      throw ValidationError("matrix_element: grid mismatch on axis " + axis_name(i));
  double total = 0.0;
  for (const auto& t : pert.terms) {
    double prod = t.amplitude;
    for (std::size_t i = 0; i < n && prod != 0.0; ++i)
      prod *= integrate_product(pert.grids[i], bra[i], t.factors[i], ket[i]);
    total += prod;
  }
  return pert.strength * total;
}

std::optional<std::size_t> parity_forbidden_axis(const Perturbation& pert, const std::vector<Parity>& bra,
                                                 const std::vector<Parity>& ket) {
  for (std::size_t i = 0; i < pert.dimension(); ++i) {
    if (bra.at(i) == Parity::none || ket.at(i) == Parity::none) continue;
    bool all_zero = true;
    for (const auto& t : pert.terms)
      if (t.parity[i] * bra[i] * ket[i] != Parity::odd) {
        all_zero = false;
        break;
      }
    if (all_zero) return i;
  }
  return std::nullopt;
}

double CouplingReport::width_for(const std::string& family) const {
  auto it = family_width.find(family);
  return it == family_width.end() ? 0.0 : it->second;
}

CouplingReport golden_rule_widths(const BICRecord& bic, const Perturbation& pert, const std::vector<AxisBasis>& bases,
                                  const GoldenRuleOptions& options) {
  check_bases(pert, bases);
  CouplingReport rep;
  rep.energy = bic.state.energy;
  for (const auto& ch : bic.channels) {
    ChannelCoupling cc;
    cc.channel = ch;
    cc.family = family_of(ch);
    {
      SeparableSystem sys;
      for (const auto& b : bases) sys.axes.push_back(b.bound);
      cc.label = ch.label(sys);
    }
    cc.forbidden_axis = channel_forbidden_axis(pert, bic, ch);
    cc.selection_rule_zero = cc.forbidden_axis.has_value();
    const auto geo = geometry(ch, bases);
    const double eps = bic.state.energy - geo.bound_energy;
    std::vector<double> bscale;
    const auto bpart = bound_part(pert, bic, ch, bases, &bscale);

    auto element = [&](const std::vector<std::span<const double>>& deloc_fns, double* rel) {
      double m = 0.0, sc = 0.0;
      for (std::size_t t = 0; t < pert.terms.size(); ++t) {
        double v = pert.terms[t].amplitude * bpart[t];
        double s = std::abs(pert.terms[t].amplitude) * bscale[t];
        for (std::size_t k = 0; k < geo.deloc.size(); ++k) {
          const std::size_t ax = geo.deloc[k];
          const auto& ket = bases[ax].bound.bound_states.at(bic.state.indices[ax]).wavefunction;
          const auto ai = axis_integrals(pert, ax, deloc_fns[k], ket);
          v *= ai.value[t];
          s *= ai.scale[t];
        }
        m += v;
        sc += s;
      }
      if (rel) *rel = sc > 0.0 ? std::abs(m) / sc : 0.0;
      return pert.strength * m;
    };

    if (geo.deloc.size() == 1) {
      const std::size_t ax = geo.deloc[0];
      const auto& set = bases[ax].continuum;
      double gamma_sum = 0.0;
      for (const auto& [p, cls] : parity_classes(set)) {
        std::size_t k = 0;
        while (k + 1 < cls.size() && cls[k + 1]->energy < eps) ++k;
        if (cls.size() < 3 || cls.front()->energy > eps || k + 1 >= cls.size() || k + 2 >= cls.size())
          throw RangeError("continuum window too narrow on axis " + axis_name(ax) + " for channel " + cc.label);
        const ContinuumState* lo = cls[k];
        const ContinuumState* hi = cls[k + 1];
        double rel_lo = 0.0, rel_hi = 0.0;
        const double m_lo = element({lo->wavefunction}, &rel_lo);
        const double m_hi = element({hi->wavefunction}, &rel_hi);
        cc.max_relative_element = std::max({cc.max_relative_element, rel_lo, rel_hi});
        const double g_lo = m_lo * m_lo * energy_factor(set, *lo);
        const double g_hi = m_hi * m_hi * energy_factor(set, *hi);
        const double w = (eps - lo->energy) / (hi->energy - lo->energy);
        gamma_sum += (1.0 - w) * g_lo + w * g_hi;
      }
      cc.density = density_of_states(set, eps);
      cc.width = 2.0 * std::numbers::pi * gamma_sum;
    } else if (geo.deloc.size() == 2) {
      const std::size_t a0 = geo.deloc[0], a1 = geo.deloc[1];
      const auto& s0 = bases[a0].continuum;
      const auto& s1 = bases[a1].continuum;
      struct Pair {
        double dist;
        std::size_t i, j;
      };
      std::vector<Pair> pairs;
      double e_lo = std::numeric_limits<double>::infinity(), e_hi = -e_lo;
      for (std::size_t i = 0; i < s0.states.size(); ++i)
        for (std::size_t j = 0; j < s1.states.size(); ++j) {
          const double e = s0.states[i].energy + s1.states[j].energy;
          e_lo = std::min(e_lo, e);
          e_hi = std::max(e_hi, e);
          if (e <= s0.states.back().energy + s1.states.front().energy &&
              e <= s1.states.back().energy + s0.states.front().energy)
            pairs.push_back({std::abs(e - eps), i, j});
        }
      const std::size_t kp = options.multi_channel_pairs;
      if (pairs.size() < kp) throw RangeError("continuum window too narrow for channel " + cc.label);
      std::nth_element(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(kp - 1), pairs.end(),
                       [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
      const double delta = pairs[kp - 1].dist;
      if (eps - delta < e_lo || eps + delta > std::min(s0.states.back().energy + s1.states.front().energy,
                                                       s1.states.back().energy + s0.states.front().energy))
        throw RangeError("continuum window too narrow for channel " + cc.label);
      double sum = 0.0;
      for (std::size_t q = 0; q < kp; ++q) {
        const auto& st0 = s0.states[pairs[q].i];
        const auto& st1 = s1.states[pairs[q].j];
        double rel = 0.0;
        const double m = element({st0.wavefunction, st1.wavefunction}, &rel);
        cc.max_relative_element = std::max(cc.max_relative_element, rel);
        sum += m * m * box_factor(s0, st0) * box_factor(s1, st1);
      }
      cc.density = static_cast<double>(kp) / (2.0 * delta);
      cc.width = 2.0 * std::numbers::pi * sum / (2.0 * delta);
    } else {
      throw ValidationError("golden_rule_widths supports channels delocalized along one or two axes");
    }
    if (cc.selection_rule_zero) cc.width = 0.0;
    cc.matrix_element_sq = cc.density > 0.0 ? cc.width / (2.0 * std::numbers::pi * cc.density) : 0.0;
    rep.family_width[cc.family] += cc.width;
    rep.total_width += cc.width;
    if (cc.selection_rule_zero) rep.selection_rule_zeros.push_back(cc.label);
    rep.channels.push_back(std::move(cc));
  }
  return rep;
}

DimensionalityReport dimensionality_selection(const BICRecord& bic, const Perturbation& pert,
                                              const std::vector<AxisBasis>& bases, double relative_tolerance) {
  check_bases(pert, bases);
  SeparableSystem sys;
  for (const auto& b : bases) sys.axes.push_back(b.bound);
  DimensionalityReport rep;
  for (const auto& ch : bic.channels) {
    ChannelSelection cs;
    cs.channel = ch;
    cs.label = ch.label(sys);
    cs.family = family_of(ch);
    cs.forbidden_axis = channel_forbidden_axis(pert, bic, ch);
    cs.predicted_forbidden = cs.forbidden_axis.has_value();

    const auto geo = geometry(ch, bases);
    const double eps = bic.state.energy - geo.bound_energy;
    std::vector<double> bscale;
    const auto bpart = bound_part(pert, bic, ch, bases, &bscale);
    // Sample continuum states near the energy on each delocalized axis: two
    // per parity class for single-axis channels, a spread of pairs otherwise.
    std::vector<std::vector<const ContinuumState*>> samples(geo.deloc.size());
    for (std::size_t k = 0; k < geo.deloc.size(); ++k) {
      const auto& set = bases[geo.deloc[k]].continuum;
      const double target = geo.deloc.size() == 1 ? eps : eps / static_cast<double>(geo.deloc.size());
      for (const auto& [p, cls] : parity_classes(set)) {
        std::vector<const ContinuumState*> c(cls);
        std::sort(c.begin(), c.end(), [&](auto* a, auto* b) {
          return std::abs(a->energy - target) < std::abs(b->energy - target);
        });
        for (std::size_t q = 0; q < std::min<std::size_t>(2, c.size()); ++q) samples[k].push_back(c[q]);
      }
      if (samples[k].empty()) throw RangeError("no continuum states on axis " + axis_name(geo.deloc[k]));
    }
    std::vector<std::size_t> idx(geo.deloc.size(), 0);
    while (true) {
      double m = 0.0, sc = 0.0;
      for (std::size_t t = 0; t < pert.terms.size(); ++t) {
        double v = pert.terms[t].amplitude * bpart[t];
        double s = std::abs(pert.terms[t].amplitude) * bscale[t];
        for (std::size_t k = 0; k < geo.deloc.size(); ++k) {
          const std::size_t ax = geo.deloc[k];
          const auto& ket = bases[ax].bound.bound_states.at(bic.state.indices[ax]).wavefunction;
          const auto ai = axis_integrals(pert, ax, samples[k][idx[k]]->wavefunction, ket);
          v *= ai.value[t];
          s *= ai.scale[t];
        }
        m += v;
        sc += s;
      }
      if (sc > 0.0) cs.max_relative_element = std::max(cs.max_relative_element, std::abs(m) / sc);
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == samples[k].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    cs.numerically_forbidden = cs.max_relative_element < relative_tolerance;
    if (cs.numerically_forbidden != cs.predicted_forbidden) rep.consistent = false;
    (cs.predicted_forbidden ? rep.forbidden : rep.radiating).push_back(cs.label);
    rep.channels.push_back(std::move(cs));
  }
  return rep;
}

std::complex<double> second_order_sum(std::span<const std::complex<double>> v_ck,
                                      std::span<const std::complex<double>> v_ki, std::span<const double> e_k,
                                      double e_i, double eta) {
  if (v_ck.size() != v_ki.size() || v_ck.size() != e_k.size())
    throw ValidationError("second_order_sum: size mismatch");
  std::complex<double> sum = 0.0;
  for (std::size_t k = 0; k < e_k.size(); ++k) sum += v_ck[k] * v_ki[k] / std::complex<double>(e_i - e_k[k], eta);
  return sum;
}

namespace {

// One axis of the intermediate basis: functions orthonormal under the grid
// inner product and their energies.
struct IntermediateAxis {
  std::vector<double> energy;
  std::vector<std::vector<double>> fn;
};

IntermediateAxis intermediate_axis(const AxisBasis& b, double e_cut) {
  IntermediateAxis ax;
  for (const auto& s : b.bound.bound_states) {
    ax.energy.push_back(s.energy);
    ax.fn.push_back(s.wavefunction);
  }
  for (const auto& s : b.continuum.states) {
    if (s.energy > e_cut) break;
    ax.energy.push_back(s.energy);
    std::vector<double> f = s.wavefunction;
    const double scale = std::sqrt(box_factor(b.continuum, s));
    for (auto& x : f) x *= scale;
    ax.fn.push_back(std::move(f));
  }
  return ax;
}

// sum over product intermediate states of prod_i F[t][i][a_i] G[t'][i][a_i] / (E - sum e + i eta)
std::complex<double> product_sum(const std::vector<std::vector<std::vector<double>>>& F,
                                 const std::vector<std::vector<std::vector<double>>>& G,
                                 const std::vector<IntermediateAxis>& axes, const std::vector<double>& amp, double e,
                                 double eta, double e_cut) {
  const std::size_t n = axes.size();
  const std::size_t nt = amp.size();
  std::complex<double> total = 0.0;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> fw(nt), gw(nt);
  while (true) {
    double ek = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = axes[i].energy[idx[i]];
      if (ei > e_cut) ok = false;
      ek += ei;
    }
    if (ok) {
      for (std::size_t t = 0; t < nt; ++t) {
        double f = amp[t], g = amp[t];
        for (std::size_t i = 0; i < n; ++i) {
          f *= F[t][i][idx[i]];
          g *= G[t][i][idx[i]];
        }
        fw[t] = f;
        gw[t] = g;
      }
      double fs = 0.0, gs = 0.0;
      for (std::size_t t = 0; t < nt; ++t) {
        fs += fw[t];
        gs += gw[t];
      }
      total += fs * gs / std::complex<double>(e - ek, eta);
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == axes[k].energy.size()) idx[k++] = 0;
    if (k == n) break;
  }
  return total;
}

}  // namespace

SecondOrderAmplitude second_order_amplitude(const BICRecord& bic, const ContinuumChannel& channel,
                                            const Perturbation& pert, const std::vector<AxisBasis>& bases,
                                            const SecondOrderOptions& options) {
  check_bases(pert, bases);
  const auto geo = geometry(channel, bases);
  if (geo.deloc.size() != 1) throw ValidationError("second_order_amplitude supports singly-delocalized channels");
  const std::size_t dax = geo.deloc[0];
  const double e = bic.state.energy;
  const double eps = e - geo.bound_energy;
  const double e_cut = options.e_cut > 0.0 ? options.e_cut : 4.0 * std::abs(e);
  if (e_cut < 4.0 * std::abs(e)) throw ValidationError("second_order_amplitude: e_cut must be at least 4 |E_BIC|");

  SecondOrderAmplitude out;
  out.channel = channel;
  {
    SeparableSystem sys;
    for (const auto& b : bases) sys.axes.push_back(b.bound);
    out.label = channel.label(sys);
  }
  out.e_cut = e_cut;

  const auto& cset = bases[dax].continuum;
  if (cset.states.empty() || cset.states.back().energy < 2.0 * e_cut)
    throw RangeError("box continuum on axis " + axis_name(dax) + " does not reach the intermediate cut");

  // Final states: nearest level to eps in each parity class.
  std::vector<const ContinuumState*> finals;
  double local_spacing = std::numeric_limits<double>::infinity();
  for (const auto& [p, cls] : parity_classes(cset)) {
    const ContinuumState* best = nullptr;
    for (auto* s : cls)
      if (!best || std::abs(s->energy - eps) < std::abs(best->energy - eps)) best = s;
    if (!best) continue;
    finals.push_back(best);
    local_spacing = std::min(local_spacing, best->spacing);
  }
  if (finals.empty()) throw RangeError("no continuum states for the final channel");
  const double eta = options.eta > 0.0 ? options.eta : 0.5 * local_spacing;
  out.eta = eta;
  out.over_smoothed = eta >= local_spacing;

  std::vector<IntermediateAxis> axes;
  for (const auto& b : bases) axes.push_back(intermediate_axis(b, 2.0 * e_cut));
  out.intermediate_basis_size = 1;
  for (const auto& a : axes)
    out.intermediate_basis_size *=
        static_cast<std::size_t>(std::count_if(a.energy.begin(), a.energy.end(), [&](double x) { return x <= e_cut; }));

  std::vector<double> amp;
  for (const auto& t : pert.terms) amp.push_back(t.amplitude);
  const std::size_t n = bases.size();
  const std::size_t nt = pert.terms.size();

  // G[t][i][a] = <a|f_ti|i_i> does not depend on the final state.
  std::vector<std::vector<std::vector<double>>> G(nt, std::vector<std::vector<double>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ket = bases[i].bound.bound_states.at(bic.state.indices[i]).wavefunction;
    for (std::size_t t = 0; t < nt; ++t)
      for (const auto& f : axes[i].fn)
        G[t][i].push_back(integrate_product(pert.grids[i], f, pert.terms[t].factors[i], ket));
  }

  double change2 = 0.0, norm2v = 0.0;
  const double lam2 = pert.strength * pert.strength;
  for (const auto* fin : finals) {
    std::vector<std::vector<std::vector<double>>> F(nt, std::vector<std::vector<double>>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> bra = channel.delocalized[i]
                                        ? std::span<const double>(fin->wavefunction)
                                        : std::span<const double>(bases[i].bound.bound_states.at(*channel.bound_index[i]).wavefunction);
      for (std::size_t t = 0; t < nt; ++t)
        for (const auto& f : axes[i].fn) F[t][i].push_back(integrate_product(pert.grids[i], bra, pert.terms[t].factors[i], f));
    }
    // Energy-normalized final state: the stored function is already energy
    // normalized unless the set uses box normalization.
    const double fnorm = std::sqrt(energy_factor(cset, *fin));
    SecondOrderTerm term;
    term.final_parity = cset.symmetric ? fin->parity : Parity::none;
    term.final_energy = geo.bound_energy + fin->energy;
    term.value_eta = lam2 * fnorm * product_sum(F, G, axes, amp, e, eta, e_cut);
    term.value_2eta = lam2 * fnorm * product_sum(F, G, axes, amp, e, 2.0 * eta, e_cut);
    term.value_double_cut = lam2 * fnorm * product_sum(F, G, axes, amp, e, eta, 2.0 * e_cut);
    term.value = 2.0 * term.value_eta - term.value_2eta;
    change2 += std::norm(term.value_double_cut - term.value_eta);
    norm2v += std::norm(term.value_double_cut);
    out.total_abs2 += std::norm(term.value);
    out.terms.push_back(term);
  }
  out.relative_change_cut = norm2v > 0.0 ? std::sqrt(change2 / norm2v) : 0.0;
  return out;
}

}  // namespace sepbic
