#include "sepbic/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sepbic/errors.hpp"
#include "sepbic/tridiagonal.hpp"

namespace sepbic {

std::string LatticeConvention::name() const {
  std::string s = sign == Sign::minus_v ? "eps=-V" : "eps=+V";
  s += range == Range::strict ? ",|k|<N" : ",|k|<=N";
  s += reference == Reference::absolute ? ",absolute" : ",band-edge";
  return s;
}

LatticeConvention LatticeConvention::parse(const std::string& text) {
  for (const auto& c : lattice_conventions())
    if (c.name() == text) return c;
  throw ValidationError("unknown lattice convention '" + text + "'");
}

std::vector<LatticeConvention> lattice_conventions() {
  using C = LatticeConvention;
  std::vector<C> out;
  for (auto ref : {C::Reference::absolute, C::Reference::band_edge})
    for (auto sign : {C::Sign::minus_v, C::Sign::plus_v})
      for (auto range : {C::Range::strict, C::Range::inclusive}) out.push_back({sign, range, ref});
  return out;
}

void TightBindingChain::validate() const {
  if (sites < 3 || sites % 2 == 0) throw ValidationError("chain needs an odd number of sites >= 3");
  if (t == 0.0) throw ValidationError("hopping must be non-zero");
  if (n < 0) throw ValidationError("defect size N must be non-negative");
  if (!std::isfinite(v) || !std::isfinite(t)) throw ValidationError("chain parameters must be finite");
}

bool TightBindingChain::in_defect(long k) const {
  const long a = std::abs(k);
  return convention.range == LatticeConvention::Range::strict ? a < n : a <= n;
}

double TightBindingChain::onsite(long k) const {
  if (!in_defect(k)) return 0.0;
  return convention.sign == LatticeConvention::Sign::minus_v ? -v : v;
}

TridiagonalOperator TightBindingChain::hamiltonian() const {
  validate();
  TridiagonalOperator op;
  const long half = static_cast<long>(sites / 2);
  for (long k = -half; k <= half; ++k) op.diagonal.push_back(onsite(k));
  op.off_diagonal.assign(sites - 1, t);
  op.weight = 1.0;
  return op;
}

Grid1D TightBindingChain::site_grid() const {
  const double half = static_cast<double>(sites / 2);
  return Grid1D(-half, half, sites);
}

double TightBindingChain::band_offset() const {
  return convention.reference == LatticeConvention::Reference::band_edge ? -2.0 * std::abs(t) : 0.0;
}

std::size_t ChainSpectrum::below_band_count() const {
  return static_cast<std::size_t>(
      std::count_if(bound_states.begin(), bound_states.end(), [](const auto& s) { return !s.above_band; }));
}

Spectrum1D ChainSpectrum::as_axis(const TightBindingChain& chain) const {
  Spectrum1D sp;
  sp.axis_label = chain.axis_label;
  sp.grid = chain.site_grid();
  sp.continuum_edge = band_lo;
  sp.continuum_top = band_hi;
  for (const auto& s : bound_states) {
    if (s.above_band) continue;
    BoundState b;
    b.index = s.index;
    b.energy = s.energy;
    b.wavefunction = s.amplitudes;
    b.parity = s.parity;
    b.nodes = count_nodes(s.amplitudes);
    sp.bound_states.push_back(std::move(b));
  }
  return sp;
}

ChainSpectrum chain_bound_states(const TightBindingChain& chain) {
  const auto op = chain.hamiltonian();
  const double edge = 2.0 * std::abs(chain.t);
  const double shift = chain.band_offset();
  const double inf = std::numeric_limits<double>::infinity();
  ChainSpectrum out;
  out.band_lo = -edge - shift;
  out.band_hi = edge - shift;
  const Grid1D grid = chain.site_grid();
  auto collect = [&](double lo, double hi, bool above) {
    for (auto& p : eig_tridiagonal(op, EigenSelection::interval(lo, hi), true)) {
      ChainBoundState s;
      s.energy = p.value - shift;
      s.above_band = above;
      double peak = 0.0;
      for (double a : p.vector) peak = std::max(peak, std::abs(a));
      const double ratio = std::max(std::abs(p.vector.front()), std::abs(p.vector.back())) / peak;
      out.edge_amplitude = std::max(out.edge_amplitude, ratio);
      if (ratio > 1e-8)
      {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.2e", ratio);
        throw GridTooSmallError("chain " + chain.axis_label + " with " + std::to_string(chain.sites) +
                                " sites truncates a defect state (edge ratio " + buf + "); use more sites");
      }
      s.parity = mirror_parity(grid, p.vector);
      s.amplitudes = std::move(p.vector);
      out.bound_states.push_back(std::move(s));
    }
  };
  collect(-inf, -edge, false);
  collect(edge, inf, true);
  std::size_t i = 0;
  for (auto& s : out.bound_states) s.index = i++;
  return out;
}

const LatticeCandidate& LatticeResolution::chosen() const {
  if (!selected) throw NumericalError("no lattice convention reproduces the target energies");
  return candidates[*selected];
}

LatticeResolution resolve_lattice_convention(double v, double t, int n, const std::vector<double>& targets,
                                             double tol, std::size_t sites) {
  LatticeResolution res;
  for (const auto& conv : lattice_conventions()) {
    LatticeCandidate c;
    c.convention = conv;
    TightBindingChain chain{v, t, n, sites, conv};
    for (const auto& s : chain_bound_states(chain).bound_states)
      if (!s.above_band) c.energies.push_back(s.energy);
    if (c.energies.size() != targets.size()) {
      c.max_deviation = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t k = 0; k < targets.size(); ++k)
        c.max_deviation = std::max(c.max_deviation, std::abs(c.energies[k] - targets[k]));
    }
    c.matches = c.max_deviation <= tol;
    if (c.matches && !res.selected) res.selected = res.candidates.size();
    res.candidates.push_back(std::move(c));
  }
  return res;
}

BICSearchResult lattice_find_bics(const TightBindingChain& chain_x, const TightBindingChain& chain_y) {
  SeparableSystem sys;
  sys.axes.push_back(chain_bound_states(chain_x).as_axis(chain_x));
  sys.axes.push_back(chain_bound_states(chain_y).as_axis(chain_y));
  return find_bics(sys);
}

LatticeDenseCheck lattice_dense_check(const TightBindingChain& chain_x, const TightBindingChain& chain_y,
                                      std::size_t cap) {
  const auto hx = chain_x.hamiltonian(), hy = chain_y.hamiltonian();
  LatticeDenseCheck out;
  out.sites = hx.size() * hy.size();
  const auto dense = dense_diagonalize_sum(hx, hy, {}, 0, 0, cap);
  const auto ex = eigenvalues(hx, EigenSelection::all()), ey = eigenvalues(hy, EigenSelection::all());
  std::vector<double> sum;
  sum.reserve(out.sites);
  for (double a : ey)
    for (double b : ex) sum.push_back(a + b);
  std::sort(sum.begin(), sum.end());
  for (std::size_t k = 0; k < sum.size(); ++k)
    out.max_spectrum_deviation = std::max(out.max_spectrum_deviation, std::abs(sum[k] - dense.values[k]));
  const double shift = chain_x.band_offset() + chain_y.band_offset();
  for (const auto& r : lattice_find_bics(chain_x, chain_y).records) {
    const double e = r.state.energy + shift;
    const auto it = std::lower_bound(dense.values.begin(), dense.values.end(), e);
    double best = std::numeric_limits<double>::infinity();
    if (it != dense.values.end()) best = std::abs(*it - e);
    if (it != dense.values.begin()) best = std::min(best, std::abs(*(it - 1) - e));
    out.max_bic_deviation = std::max(out.max_bic_deviation, best);
  }
  return out;
}

}  // namespace sepbic
