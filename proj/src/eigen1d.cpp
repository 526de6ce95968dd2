#include "sepbic/eigen1d.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sepbic/errors.hpp"
#include "sepbic/tridiagonal.hpp"

namespace sepbic {

std::string to_string(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "none";
  }
}

Parity parse_parity(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "none") return Parity::none;
  throw ValidationError("unknown parity '" + s + "'");
}

Parity operator*(Parity a, Parity b) {
  if (a == Parity::none || b == Parity::none) return Parity::none;
  return a == b ? Parity::even : Parity::odd;
}

Potential1D Potential1D::gaussian_well(double depth, double width, double center) {
  if (!(depth >= 0.0) || !std::isfinite(depth)) throw ValidationError("gaussian well depth must be >= 0");
  if (!(width > 0.0) || !std::isfinite(width)) throw ValidationError("gaussian well width must be > 0");
  Potential1D p;
  p.kind_ = Kind::gaussian_well;
  p.depth_ = depth;
  p.width_ = width;
  p.center_ = center;
  return p;
}

Potential1D Potential1D::tabulated(Grid1D grid, std::vector<double> samples) {
  if (samples.size() != grid.size()) throw ValidationError("tabulated potential: sample count does not match grid");
  for (double v : samples)
    if (!std::isfinite(v)) throw ValidationError("tabulated potential has non-finite samples");
  Potential1D p;
  p.kind_ = Kind::tabulated;
  p.table_grid_ = std::move(grid);
  p.table_ = std::move(samples);
  return p;
}

double Potential1D::operator()(double x) const {
  if (kind_ == Kind::gaussian_well) {
    const double u = (x - center_) / width_;
    return -depth_ * std::exp(-2.0 * u * u);
  }
  if (x < table_grid_.x_min() || x > table_grid_.x_max()) return 0.0;
  const double t = (x - table_grid_.x_min()) / table_grid_.spacing();
  auto k = static_cast<std::size_t>(std::floor(t));
  if (k >= table_.size() - 1) k = table_.size() - 2;
  const double w = t - static_cast<double>(k);
  return (1.0 - w) * table_[k] + w * table_[k + 1];
}

std::vector<double> Potential1D::sample(const Grid1D& grid) const {
  if (kind_ == Kind::tabulated && table_grid_.same_as(grid)) return table_;
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = (*this)(grid[i]);
  return v;
}

double Potential1D::extent() const {
  if (kind_ == Kind::gaussian_well) return width_;
  double first = 0, last = 0;
  bool any = false;
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (table_[i] != 0.0) {
      if (!any) first = table_grid_[i];
      last = table_grid_[i];
      any = true;
    }
  }
  return any ? std::max(std::abs(first), std::abs(last)) : 0.0;
}

bool Spectrum1D::symmetric() const {
  return std::all_of(bound_states.begin(), bound_states.end(),
                     [](const BoundState& b) { return b.parity != Parity::none; });
}

std::size_t count_nodes(const std::vector<double>& psi) {
  double peak = 0.0;
  for (double v : psi) peak = std::max(peak, std::abs(v));
  const double floor_amp = 1e-8 * peak;
  std::size_t nodes = 0;
  int last_sign = 0;
  for (double v : psi) {
    if (std::abs(v) <= floor_amp) continue;
    const int s = v > 0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++nodes;
    last_sign = s;
  }
  return nodes;
}

bool is_mirror_symmetric(const Grid1D& grid, const std::vector<double>& samples, double rel_tol) {
  if (!grid.is_symmetric()) return false;
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (std::abs(samples[i] - samples[grid.mirror(i)]) > rel_tol * peak) return false;
  return true;
}

Parity mirror_parity(const Grid1D& grid, const std::vector<double>& psi) {
  if (!grid.is_symmetric()) return Parity::none;
  double s = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    s += psi[i] * psi[grid.mirror(i)];
    norm += psi[i] * psi[i];
  }
  if (norm == 0.0) return Parity::none;
  const double r = s / norm;
  if (r > 0.5) return Parity::even;
  if (r < -0.5) return Parity::odd;
  return Parity::none;
}

namespace {

double peak_abs(const std::vector<double>& v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, std::abs(x));
  return p;
}

void check_potential_edges(const Potential1D& pot, const Grid1D& grid, const std::vector<double>& v,
                           double rel_tol) {
  const double scale = pot.kind() == Potential1D::Kind::gaussian_well ? pot.depth() : peak_abs(v);
  if (scale == 0.0) return;
  const double edge = std::max(std::abs(v.front()), std::abs(v.back()));
  if (edge > rel_tol * scale)
    throw GridTooSmallError("potential does not vanish at the grid edges: |V(edge)| = " + std::to_string(edge) +
                            " on [" + std::to_string(grid.x_min()) + ", " + std::to_string(grid.x_max()) + "]");
}

}  // namespace

Spectrum1D solve_bound_states(const Potential1D& pot, const Grid1D& grid, KineticConvention convention,
                              const Eigen1DOptions& options, const std::string& axis_label) {
  const auto v = pot.sample(grid);
  check_potential_edges(pot, grid, v, options.potential_edge_tol);
  Spectrum1D spec;
  spec.axis_label = axis_label;
  spec.grid = grid;
  spec.convention = convention;
  const double vmax = peak_abs(v);
  if (vmax == 0.0) return spec;
  const bool symmetric = is_mirror_symmetric(grid, v);
  const auto op = build_hamiltonian(grid, v, convention);
  const double cut = -options.continuum_tol * vmax;
  auto pairs = eig_tridiagonal(op, EigenSelection::interval(-std::numeric_limits<double>::infinity(), cut));
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    BoundState b;
    b.index = n;
    b.energy = pairs[n].value;
    b.wavefunction = std::move(pairs[n].vector);
    b.parity = symmetric ? mirror_parity(grid, b.wavefunction) : Parity::none;
    b.nodes = count_nodes(b.wavefunction);
    spec.bound_states.push_back(std::move(b));
  }
  if (!spec.bound_states.empty()) {
    const auto& top = spec.bound_states.back().wavefunction;
    const double edge = std::max(std::abs(top.front()), std::abs(top.back()));
    if (edge > options.edge_amplitude_tol * peak_abs(top))
      throw GridTooSmallError("grid too small for bound state " + std::to_string(spec.bound_states.size() - 1) +
                              " on axis " + axis_label + ": edge amplitude ratio " +
                              std::to_string(edge / peak_abs(top)));
  }
  return spec;
}

namespace {

// Same-parity spacing around each state of one class (indices into states).
void assign_spacings(std::vector<ContinuumState>& states, const std::vector<std::size_t>& cls) {
  const std::size_t m = cls.size();
  for (std::size_t k = 0; k < m; ++k) {
    double sp;
    if (m == 1)
      sp = 0.0;
    else if (k == 0)
      sp = states[cls[1]].energy - states[cls[0]].energy;
    else if (k + 1 == m)
      sp = states[cls[m - 1]].energy - states[cls[m - 2]].energy;
    else
      sp = 0.5 * (states[cls[k + 1]].energy - states[cls[k - 1]].energy);
    states[cls[k]].spacing = sp;
  }
}

std::map<Parity, std::vector<std::size_t>> classes(const BoxContinuumSet& set) {
  std::map<Parity, std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < set.states.size(); ++s) out[set.symmetric ? set.states[s].parity : Parity::none].push_back(s);
  return out;
}

double class_density(const BoxContinuumSet& set, const std::vector<std::size_t>& cls, double energy) {
  if (cls.size() < 3) throw RangeError("density of states: fewer than three levels in class");
  // Midpoint staircase derivative, linearly interpolated between midpoints.
  const std::size_t m = cls.size();
  auto e = [&](std::size_t k) { return set.states[cls[k]].energy; };
  const double lo = 0.5 * (e(0) + e(1));
  const double hi = 0.5 * (e(m - 2) + e(m - 1));
  if (energy < lo || energy > hi)
    throw RangeError("energy " + std::to_string(energy) + " outside density-of-states window [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  for (std::size_t k = 0; k + 2 < m; ++k) {
    const double m0 = 0.5 * (e(k) + e(k + 1));
    const double m1 = 0.5 * (e(k + 1) + e(k + 2));
    if (energy <= m1) {
      const double r0 = 1.0 / (e(k + 1) - e(k));
      const double r1 = 1.0 / (e(k + 2) - e(k + 1));
      const double w = (energy - m0) / (m1 - m0);
      return (1.0 - w) * r0 + w * r1;
    }
  }
  return 1.0 / (e(m - 1) - e(m - 2));
}

}  // namespace

BoxContinuumSet solve_box_continuum(const Potential1D& pot, const Grid1D& box, KineticConvention convention,
                                    double e_max, const BoxOptions& options) {
  const double ext = pot.extent();
  if (options.min_box_factor > 0.0 && ext > 0.0) {
    const double half = 0.5 * (box.x_max() - box.x_min());
    if (half < options.min_box_factor * ext)
      throw ValidationError("box half-extent " + std::to_string(half) + " is below " +
                            std::to_string(options.min_box_factor) + "x the potential extent " + std::to_string(ext));
  }
  const auto v = pot.sample(box);
  BoxContinuumSet set;
  set.box_grid = box;
  set.normalization = options.normalization;
  set.symmetric = is_mirror_symmetric(box, v);
  if (!(e_max > 0.0)) return set;
  const double vmax = peak_abs(v);
  const double floor_e = vmax > 0.0 ? 1e-9 * vmax : 0.0;
  const auto op = build_hamiltonian(box, v, convention);
  auto pairs = eig_tridiagonal(op, EigenSelection::interval(floor_e, e_max));
  for (auto& p : pairs) {
    ContinuumState s;
    s.energy = p.value;
    s.wavefunction = std::move(p.vector);
    s.parity = set.symmetric ? mirror_parity(box, s.wavefunction) : Parity::none;
    set.states.push_back(std::move(s));
  }
  for (const auto& [parity, cls] : classes(set)) assign_spacings(set.states, cls);
  if (options.normalization == BoxContinuumSet::Normalization::energy) {
    for (auto& s : set.states) {
      if (s.spacing <= 0.0) continue;
      const double f = 1.0 / std::sqrt(s.spacing);
      for (auto& x : s.wavefunction) x *= f;
    }
  }
  return set;
}

double density_of_states(const BoxContinuumSet& set, double energy, std::optional<Parity> parity) {
  const auto cls = classes(set);
  if (parity) {
    const Parity key = set.symmetric ? *parity : Parity::none;
    auto it = cls.find(key);
    if (it == cls.end()) throw RangeError("no continuum levels of parity " + to_string(*parity));
    return class_density(set, it->second, energy);
  }
  double total = 0.0;
  for (const auto& [p, c] : cls) total += class_density(set, c, energy);
  return total;
}

AxisBasis solve_axis(const Potential1D& pot, const Grid1D& grid, KineticConvention convention, double e_max,
                     const std::string& axis_label, const Eigen1DOptions& eigen_options,
                     const BoxOptions& box_options) {
  AxisBasis b;
  b.bound = solve_bound_states(pot, grid, convention, eigen_options, axis_label);
  b.continuum = solve_box_continuum(pot, grid, convention, e_max, box_options);
  b.potential = pot.sample(grid);
  return b;
}

}  // namespace sepbic
