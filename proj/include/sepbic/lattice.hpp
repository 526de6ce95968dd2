#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sepbic/dense.hpp"
#include "sepbic/eigen1d.hpp"
#include "sepbic/separable.hpp"

namespace sepbic {

/// How the defect parameters of a chain are read.
struct LatticeConvention {
  enum class Sign { minus_v, plus_v };          // onsite eps = -V or eps = +V inside the defect
  enum class Range { strict, inclusive };       // |k| < N or |k| <= N
  enum class Reference { absolute, band_edge };  // energies as computed, or minus the lower band edge -2|t|
  Sign sign = Sign::minus_v;
  Range range = Range::strict;
  Reference reference = Reference::absolute;

  std::string name() const;
  static LatticeConvention parse(const std::string& text);
  bool operator==(const LatticeConvention&) const = default;
};

/// All sign/range/reference combinations, in a fixed order.
std::vector<LatticeConvention> lattice_conventions();

/// Nearest-neighbour chain of M sites k = -(M-1)/2 .. (M-1)/2 with a centred
/// defect region.
struct TightBindingChain {
  double v = 0.0;
  double t = 1.0;
  int n = 0;
  std::size_t sites = 201;
  LatticeConvention convention;
  std::string axis_label = "x";

  void validate() const;
  double onsite(long k) const;
  bool in_defect(long k) const;
  TridiagonalOperator hamiltonian() const;
  Grid1D site_grid() const;
  /// Lower band edge in the reported reference (-2|t| or 0).
  double band_offset() const;
};

struct ChainBoundState {
  std::size_t index = 0;
  double energy = 0.0;  // in the chain's energy reference
  std::vector<double> amplitudes;  // unit 2-norm
  Parity parity = Parity::none;
  bool above_band = false;
};

struct ChainSpectrum {
  std::vector<ChainBoundState> bound_states;  // below-band states first, then above-band, each ascending
  double band_lo = 0.0;  // -2|t| shifted into the chain's reference
  double band_hi = 0.0;
  double edge_amplitude = 0.0;  // worst |psi(end)| / max|psi| among bound states

  std::size_t below_band_count() const;
  /// Below-band states as a separable axis with continuum [band_lo, band_hi].
  Spectrum1D as_axis(const TightBindingChain& chain) const;
};

/// All eigenpairs outside [-2|t|, 2|t|]. Throws GridTooSmallError when a bound
/// state reaches the chain ends above 1e-8 of its peak.
ChainSpectrum chain_bound_states(const TightBindingChain& chain);

struct LatticeCandidate {
  LatticeConvention convention;
  std::vector<double> energies;  // below-band bound energies
  double max_deviation = 0.0;     // vs targets; +inf if the count differs
  bool matches = false;
};

struct LatticeResolution {
  std::vector<LatticeCandidate> candidates;
  std::optional<std::size_t> selected;  // first matching candidate

  const LatticeCandidate& chosen() const;
};

/// Solve the chain under every convention and keep those whose below-band
/// energies match `targets` within `tol`.
LatticeResolution resolve_lattice_convention(double v, double t, int n, const std::vector<double>& targets,
                                             double tol = 0.01, std::size_t sites = 201);

/// BICs of the product lattice H = H_x (x) 1 + 1 (x) H_y, with channel
/// bands of finite width 4|t| on delocalized axes.
BICSearchResult lattice_find_bics(const TightBindingChain& chain_x, const TightBindingChain& chain_y);

struct LatticeDenseCheck {
  std::size_t sites = 0;
  double max_spectrum_deviation = 0.0;  // dense vs sorted tensor sum
  double max_bic_deviation = 0.0;       // each BIC energy vs nearest dense value
};

/// Full diagonalization of the product lattice (M_x * M_y <= cap).
LatticeDenseCheck lattice_dense_check(const TightBindingChain& chain_x, const TightBindingChain& chain_y,
                                      std::size_t cap = kDenseDefaultCap);

}  // namespace sepbic
