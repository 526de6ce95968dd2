// Defect chains, the convention resolver and product-lattice BICs.

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "sepbic/lattice.hpp"

using namespace sepbic;

namespace {

const std::vector<double> kTargets{-0.93, -0.74, -0.46, -0.16};

TightBindingChain resolved_chain(std::size_t sites = 201, const std::string& label = "x") {
  const auto res = resolve_lattice_convention(-1.0, -0.3, 2, kTargets);
  return {-1.0, -0.3, 2, sites, res.chosen().convention, label};
}

std::set<std::vector<std::size_t>> bic_indices(const BICSearchResult& r) {
  std::set<std::vector<std::size_t>> out;
  for (const auto& rec : r.records) out.insert(rec.state.indices);
  return out;
}

}  // namespace

TEST_CASE("convention names round-trip") {
  const auto all = lattice_conventions();
  CHECK(all.size() == 8);
  for (const auto& c : all) CHECK(LatticeConvention::parse(c.name()) == c);
  CHECK_THROWS_AS(LatticeConvention::parse("eps=V"), ValidationError);
}

TEST_CASE("defect region and onsite energies") {
  TightBindingChain c{-1.0, -0.3, 2, 11, {}};
  CHECK(c.in_defect(1));
  CHECK_FALSE(c.in_defect(2));
  CHECK(c.onsite(0) == 1.0);
  c.convention.range = LatticeConvention::Range::inclusive;
  c.convention.sign = LatticeConvention::Sign::plus_v;
  CHECK(c.in_defect(-2));
  CHECK(c.onsite(-2) == -1.0);
  CHECK(c.onsite(3) == 0.0);
  c.sites = 10;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("resolver reproduces the published chain energies") {
  const auto res = resolve_lattice_convention(-1.0, -0.3, 2, kTargets);
  REQUIRE(res.selected.has_value());
  const auto& c = res.chosen();
  CHECK(c.convention.sign == LatticeConvention::Sign::plus_v);
  CHECK(c.convention.range == LatticeConvention::Range::inclusive);
  CHECK(c.convention.reference == LatticeConvention::Reference::band_edge);
  REQUIRE(c.energies.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(c.energies[k] == doctest::Approx(kTargets[k]).epsilon(0.01 / 0.16));
  CHECK(std::count_if(res.candidates.begin(), res.candidates.end(), [](const auto& x) { return x.matches; }) == 1);

  // The absolute-reference twin has the same levels shifted by the band edge.
  for (const auto& other : res.candidates)
    if (other.convention.sign == c.convention.sign && other.convention.range == c.convention.range &&
        other.convention.reference == LatticeConvention::Reference::absolute) {
      REQUIRE(other.energies.size() == 4);
      for (std::size_t k = 0; k < 4; ++k) CHECK(other.energies[k] == doctest::Approx(c.energies[k] - 0.6).epsilon(1e-12));
      CHECK_FALSE(other.matches);
    }
  // The literal eps = -V reading of V = -1 is repulsive: no levels below the band.
  for (const auto& other : res.candidates)
    if (other.convention.sign == LatticeConvention::Sign::minus_v) CHECK(other.energies.empty());
}

TEST_CASE("chain spectrum structure") {
  const auto chain = resolved_chain();
  const auto sp = chain_bound_states(chain);
  CHECK(sp.below_band_count() == 4);
  CHECK(sp.band_lo == doctest::Approx(0.0));
  CHECK(sp.band_hi == doctest::Approx(1.2));
  CHECK(sp.edge_amplitude < 1e-8);
  const Parity expect[] = {Parity::even, Parity::odd, Parity::even, Parity::odd};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(sp.bound_states[k].parity == expect[k]);
    CHECK(sp.bound_states[k].energy < sp.band_lo);
  }
  // Repulsive reading: the mirror-image states sit above the band.
  auto rep = chain;
  rep.convention.sign = LatticeConvention::Sign::minus_v;
  const auto sr = chain_bound_states(rep);
  CHECK(sr.below_band_count() == 0);
  CHECK(sr.bound_states.size() == 4);
  for (const auto& s : sr.bound_states) CHECK(s.above_band);
}

TEST_CASE("zero defect and a single deep site") {
  TightBindingChain flat{0.0, 1.0, 3, 201, {}};
  CHECK(chain_bound_states(flat).bound_states.empty());

  // One site at -V: exact level -sqrt(V^2 + 4 t^2), second order -V - 2 t^2 / V.
  const double v = 10.0, t = 1.0;
  TightBindingChain deep{v, t, 1, 101, {}};
  deep.convention.sign = LatticeConvention::Sign::minus_v;
  deep.convention.range = LatticeConvention::Range::strict;
  const auto sp = chain_bound_states(deep);
  REQUIRE(sp.below_band_count() == 1);
  CHECK(sp.bound_states[0].energy == doctest::Approx(-std::sqrt(v * v + 4 * t * t)).epsilon(1e-12));
  CHECK(std::abs(sp.bound_states[0].energy - (-v - 2 * t * t / v)) < 2 * std::pow(t, 4) / std::pow(v, 3));
}

TEST_CASE("uniform chain band edges converge to 2|t|") {
  TightBindingChain flat{0.0, -0.3, 0, 201, {}};
  const auto ev = eigenvalues(flat.hamiltonian(), EigenSelection::all());
  CHECK(std::abs(ev.front() + 0.6) < 1e-3);
  CHECK(std::abs(ev.back() - 0.6) < 1e-3);
  CHECK(ev.front() > -0.6);
}

TEST_CASE("bound-state count is monotone in the defect depth") {
  // Sturm counts below the band edge, so barely bound states need no vectors.
  std::size_t prev = 0;
  for (double v = 0.05; v <= 3.0; v += 0.05) {
    TightBindingChain c{-v, -0.3, 2, 201, resolved_chain().convention};
    const auto n = count_below(c.hamiltonian(), -0.6);
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(prev >= 5);
}

TEST_CASE("truncated chains are rejected") {
  auto c = resolved_chain(31);
  CHECK_THROWS_AS(chain_bound_states(c), GridTooSmallError);
}

TEST_CASE("product lattice BICs") {
  const auto r = lattice_find_bics(resolved_chain(201, "x"), resolved_chain(201, "y"));
  const std::set<std::vector<std::size_t>> expect{{2, 2}, {2, 3}, {3, 2}, {3, 3}, {3, 1}, {1, 3}};
  CHECK(bic_indices(r) == expect);
  for (const auto& rec : r.records) {
    const bool odd_odd = rec.state.indices == std::vector<std::size_t>{3, 1} ||
                         rec.state.indices == std::vector<std::size_t>{1, 3};
    CHECK(rec.symmetry_protected == odd_odd);
    for (const auto& ch : rec.channels) {
      CHECK(ch.top == doctest::Approx(ch.onset + 1.2));
      CHECK(rec.state.energy <= ch.top);
    }
  }
  // |3,1> meets the two ground-state channels (four standing waves, even and
  // odd along the band), each even on its bound axis.
  for (const auto& rec : r.records)
    if (rec.state.indices == std::vector<std::size_t>{3, 1}) {
      CHECK(rec.channels.size() == 2);
      for (const auto& ch : rec.channels)
        for (auto p : ch.parity) CHECK(p != Parity::odd);
    }
}

TEST_CASE("shallow defects have no lattice BICs") {
  const auto conv = resolved_chain().convention;
  TightBindingChain c{-0.2, -0.3, 0, 201, conv};
  REQUIRE(chain_bound_states(c).below_band_count() == 1);
  CHECK(lattice_find_bics(c, c).records.empty());
}

TEST_CASE("dense product lattice equals the tensor sum") {
  const auto check = lattice_dense_check(resolved_chain(61, "x"), resolved_chain(61, "y"));
  CHECK(check.sites == 3721);
  CHECK(check.max_spectrum_deviation < 1e-10);
  CHECK(check.max_bic_deviation < 1e-10);
}
