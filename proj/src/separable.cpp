#include "sepbic/separable.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>

#include "sepbic/errors.hpp"

namespace sepbic {

void SeparableSystem::validate() const {
  if (axes.size() < 2) throw ValidationError("separable system needs at least two axes");
  for (const auto& a : axes)
    if (a.continuum_top < a.continuum_edge) throw ValidationError("axis " + a.axis_label + " has an empty continuum");
}

std::string ProductState::label() const {
  std::string s = "|";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(indices[i]);
  }
  return s + ">";
}

double product_energy(const SeparableSystem& sys, const std::vector<std::size_t>& indices) {
  if (indices.size() != sys.dimension()) throw ValidationError("index tuple length does not match axis count");
  double e = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= sys.axes[i].size())
      throw ValidationError("axis " + sys.axes[i].axis_label + " has no bound state " + std::to_string(indices[i]));
    e += sys.axes[i].energy(indices[i]);
  }
  return e;
}

ProductState make_product_state(const SeparableSystem& sys, std::vector<std::size_t> indices) {
  ProductState s;
  s.energy = product_energy(sys, indices);
  for (std::size_t i = 0; i < indices.size(); ++i) s.parities.push_back(sys.axes[i].parity(indices[i]));
  s.indices = std::move(indices);
  return s;
}

std::size_t ContinuumChannel::n_delocalized() const {
  return static_cast<std::size_t>(std::count(delocalized.begin(), delocalized.end(), true));
}

std::string ContinuumChannel::label(const SeparableSystem& sys) const {
  std::string s = "|";
  for (std::size_t i = 0; i < delocalized.size(); ++i) {
    if (i) s += ",";
    s += delocalized[i] ? "E" + sys.axes[i].axis_label : std::to_string(*bound_index[i]);
  }
  return s + ">";
}

namespace {

// Calls f(channel) for every channel (all non-empty delocalized subsets, all
// bound index combinations on the complement) with onset < limit.
void for_each_channel(const SeparableSystem& sys, double limit, const std::function<void(ContinuumChannel&&)>& f) {
  const std::size_t n = sys.dimension();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    ContinuumChannel base;
    base.delocalized.assign(n, false);
    base.bound_index.assign(n, std::nullopt);
    base.parity.assign(n, Parity::none);
    double edge_sum = 0.0, width_sum = 0.0;
    std::vector<std::size_t> bound_axes;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        base.delocalized[i] = true;
        edge_sum += sys.axes[i].continuum_edge;
        width_sum += sys.axes[i].continuum_top - sys.axes[i].continuum_edge;
      } else {
        bound_axes.push_back(i);
      }
    }
    // Bound axes with no states make the channel impossible.
    bool possible = true;
    for (auto ax : bound_axes) possible = possible && sys.axes[ax].size() > 0;
    if (!possible) continue;
    // rest[k]: lowest energy the bound axes k.. can still add (their ground states).
    std::vector<double> rest(bound_axes.size() + 1, 0.0);
    for (std::size_t k = bound_axes.size(); k-- > 0;) rest[k] = rest[k + 1] + sys.axes[bound_axes[k]].energy(0);
    // Depth-first over bound indices; energies ascend, so stop a level once
    // even the ground states of the remaining axes cannot reach below limit.
    std::function<void(std::size_t, double, ContinuumChannel&)> rec = [&](std::size_t k, double onset,
                                                                         ContinuumChannel& ch) {
      if (k == bound_axes.size()) {
        ContinuumChannel out = ch;
        out.onset = onset;
        out.top = onset + width_sum;
        f(std::move(out));
        return;
      }
      const std::size_t ax = bound_axes[k];
      const auto& spec = sys.axes[ax];
      for (std::size_t b = 0; b < spec.size(); ++b) {
        const double e = onset + spec.energy(b);
        if (e + rest[k + 1] >= limit) break;
        ch.bound_index[ax] = b;
        ch.parity[ax] = spec.parity(b);
        rec(k + 1, e, ch);
      }
      ch.bound_index[ax] = std::nullopt;
      ch.parity[ax] = Parity::none;
    };
    if (bound_axes.empty()) {
      if (edge_sum < limit) {
        base.onset = edge_sum;
        base.top = edge_sum + width_sum;
        f(std::move(base));
      }
      continue;
    }
    rec(0, edge_sum, base);
  }
}

}  // namespace

Threshold continuum_threshold(const SeparableSystem& sys) {
  sys.validate();
  Threshold t;
  t.energy = std::numeric_limits<double>::infinity();
  for (const auto& a : sys.axes) t.no_bound_products = t.no_bound_products || a.size() == 0;
  // Lowest onset: ground states on all bound axes, continuum edge on the rest.
  const std::size_t n = sys.dimension();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double onset = 0.0;
    bool possible = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i))
        onset += sys.axes[i].continuum_edge;
      else if (sys.axes[i].size() == 0)
        possible = false;
      else
        onset += sys.axes[i].energy(0);
    }
    if (possible) t.energy = std::min(t.energy, onset);
  }
  return t;
}

std::vector<ContinuumChannel> degenerate_channels(const ProductState& state, const SeparableSystem& sys) {
  const auto thr = continuum_threshold(sys);
  std::vector<ContinuumChannel> out;
  if (!(state.energy > thr.energy)) return out;
  const double e = state.energy;
  const double limit = e - 1e-12 * std::abs(e);
  for_each_channel(sys, std::nextafter(limit, std::numeric_limits<double>::infinity()), [&](ContinuumChannel&& ch) {
    if (ch.onset <= limit && e <= ch.top) out.push_back(std::move(ch));
  });
  std::stable_sort(out.begin(), out.end(), [](const ContinuumChannel& a, const ContinuumChannel& b) {
    if (a.n_delocalized() != b.n_delocalized()) return a.n_delocalized() < b.n_delocalized();
    if (a.delocalized != b.delocalized) return a.delocalized > b.delocalized;
    return a.onset < b.onset;
  });
  return out;
}

bool is_symmetry_protected(const ProductState& state, const std::vector<ContinuumChannel>& channels) {
  if (channels.empty()) return false;
  for (const auto& ch : channels) {
    bool mismatch = false;
    for (std::size_t i = 0; i < ch.parity.size() && !mismatch; ++i) {
      if (ch.delocalized[i]) continue;
      const Parity a = state.parities[i], b = ch.parity[i];
      mismatch = a != Parity::none && b != Parity::none && a != b;
    }
    if (!mismatch) return false;
  }
  return true;
}

std::vector<ProductState> enumerate_products(const SeparableSystem& sys) {
  sys.validate();
  std::vector<ProductState> out;
  std::vector<std::size_t> idx(sys.dimension(), 0);
  for (const auto& a : sys.axes)
    if (a.size() == 0) return out;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == sys.dimension()) {
      out.push_back(make_product_state(sys, idx));
      return;
    }
    for (std::size_t b = 0; b < sys.axes[k].size(); ++b) {
      idx[k] = b;
      rec(k + 1);
    }
  };
  rec(0);
  std::stable_sort(out.begin(), out.end(), [](const ProductState& a, const ProductState& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.indices < b.indices;
  });
  return out;
}

BICSearchResult find_bics(const SeparableSystem& sys, const BICSearchOptions& options) {
  BICSearchResult res;
  res.threshold = continuum_threshold(sys);
  if (res.threshold.no_bound_products) return res;
  const double thr = res.threshold.energy;
  if (sys.dimension() > 4) throw ValidationError("find_bics supports at most 4 axes");
  struct Hit {
    double energy;
    std::array<std::uint32_t, 4> indices;
  };
  std::vector<Hit> hits;
  std::array<std::uint32_t, 4> idx{};
  std::function<void(std::size_t, double)> rec = [&](std::size_t k, double e) {
    if (k == sys.dimension()) {
      if (e > thr) hits.push_back({e, idx});
      return;
    }
    for (std::size_t b = 0; b < sys.axes[k].size(); ++b) {
      idx[k] = static_cast<std::uint32_t>(b);
      rec(k + 1, e + sys.axes[k].energy(b));
    }
  };
  rec(0, 0.0);
  res.total = hits.size();
  auto less = [](const Hit& a, const Hit& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.indices < b.indices;
  };
  if (options.max_records && options.max_records < hits.size()) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(options.max_records), hits.end(), less);
    hits.resize(options.max_records);
  } else {
    std::sort(hits.begin(), hits.end(), less);
  }
  for (auto& h : hits) {
    if (options.max_records && res.records.size() >= options.max_records) break;
    BICRecord r;
    r.state = make_product_state(sys, std::vector<std::size_t>(h.indices.begin(), h.indices.begin() + static_cast<std::ptrdiff_t>(sys.dimension())));
    r.threshold = thr;
    if (options.include_channels) {
      r.channels = degenerate_channels(r.state, sys);
      r.symmetry_protected = is_symmetry_protected(r.state, r.channels);
    }
    res.records.push_back(std::move(r));
  }
  return res;
}

std::vector<double> product_wavefunction_2d(const SeparableSystem& sys, const ProductState& state) {
  if (sys.dimension() != 2) throw ValidationError("product_wavefunction_2d needs a 2-axis system");
  const auto& fx = sys.axes[0].bound_states.at(state.indices[0]).wavefunction;
  const auto& fy = sys.axes[1].bound_states.at(state.indices[1]).wavefunction;
  std::vector<double> psi(fx.size() * fy.size());
  for (std::size_t j = 0; j < fy.size(); ++j)
    for (std::size_t i = 0; i < fx.size(); ++i) psi[j * fx.size() + i] = fx[i] * fy[j];
  return psi;
}

}  // namespace sepbic
