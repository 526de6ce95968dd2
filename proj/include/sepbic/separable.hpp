#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sepbic/eigen1d.hpp"

namespace sepbic {

/// H = sum_i h_i over N >= 2 separated axes, each given by its bound spectrum.
/// The same structure describes N non-interacting particles.
struct SeparableSystem {
  std::vector<Spectrum1D> axes;

  std::size_t dimension() const noexcept { return axes.size(); }
  void validate() const;
};

struct ProductState {
  std::vector<std::size_t> indices;
  double energy = 0.0;
  std::vector<Parity> parities;

  std::string label() const;
};

ProductState make_product_state(const SeparableSystem& sys, std::vector<std::size_t> indices);

/// Continuum family: delocalized along some axes, bound with fixed indices on the rest.
struct ContinuumChannel {
  std::vector<bool> delocalized;                        // per axis
  std::vector<std::optional<std::size_t>> bound_index;  // nullopt on delocalized axes
  std::vector<Parity> parity;                           // none on delocalized axes
  double onset = 0.0;
  double top = 0.0;  // +inf unless some delocalized axis has a band top

  std::size_t n_delocalized() const;
  std::string label(const SeparableSystem& sys) const;
};

struct BICRecord {
  ProductState state;
  double threshold = 0.0;
  std::vector<ContinuumChannel> channels;
  bool symmetry_protected = false;
};

struct Threshold {
  double energy = 0.0;
  /// Set when some axis has no bound state (no bound products exist at all).
  bool no_bound_products = false;
};

/// Lowest channel onset: min_i E_i^0 for N = 2; for N = 3 the smallest sum of
/// ground energies on the non-delocalized axes.
Threshold continuum_threshold(const SeparableSystem& sys);

/// Every channel whose continuum contains E: onset <= E - 1e-12 |E| and E <= top.
/// Empty when E is at or below the threshold.
std::vector<ContinuumChannel> degenerate_channels(const ProductState& state, const SeparableSystem& sys);

/// Mismatch with every degenerate channel on some shared symmetric bound axis.
bool is_symmetry_protected(const ProductState& state, const std::vector<ContinuumChannel>& channels);

struct BICSearchOptions {
  bool include_channels = true;
  /// Stop after this many records (0 = no limit); counting is unaffected.
  std::size_t max_records = 0;
};

struct BICSearchResult {
  Threshold threshold;
  std::vector<BICRecord> records;  // sorted by energy, then indices
  std::size_t total = 0;           // number of BICs found, even if records were capped
};

BICSearchResult find_bics(const SeparableSystem& sys, const BICSearchOptions& options = {});

/// All product states sorted by energy then lexicographic indices.
std::vector<ProductState> enumerate_products(const SeparableSystem& sys);

/// Sum of all per-axis bound energies for the given index tuple (no enumeration).
double product_energy(const SeparableSystem& sys, const std::vector<std::size_t>& indices);

/// Separable product wavefunction of a 2D state, x index fastest, grid-normalized.
std::vector<double> product_wavefunction_2d(const SeparableSystem& sys, const ProductState& state);

}  // namespace sepbic
