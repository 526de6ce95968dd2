#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sepbic/coupling.hpp"
#include "sepbic/eigen1d.hpp"
#include "sepbic/separable.hpp"
#include "sepbic/tdse2d.hpp"

namespace sepbic {

/// Metadata written at the top of every output: "# key=value" lines in CSVs,
/// header entries in binary dumps.
struct OutputTag {
  std::string config_hash;
  std::string convention;
};

/// n,energy,parity,nodes
void write_spectrum_csv(std::ostream& out, const Spectrum1D& spectrum, const OutputTag& tag);
/// indices,energy,threshold,n_channels,symmetry_protected (indices joined with ';')
void write_bic_catalog_csv(std::ostream& out, const BICSearchResult& bics, const OutputTag& tag);
/// bic,channel,onset,top,n_delocalized
void write_channels_csv(std::ostream& out, const BICSearchResult& bics, const SeparableSystem& sys,
                        const OutputTag& tag);
/// channel,family,matrix_element_sq,density,width,forbidden,forbidden_axis
void write_coupling_csv(std::ostream& out, const CouplingReport& report, const OutputTag& tag);
/// channel,family,predicted_forbidden,forbidden_axis,max_relative_element,numerically_forbidden
void write_dimensionality_csv(std::ostream& out, const DimensionalityReport& report, const OutputTag& tag);
/// t,survival,interior_norm,total_norm,flux_plus_x,flux_minus_x,flux_plus_y,flux_minus_y
void write_observables_csv(std::ostream& out, const RadiationRecord& record, const OutputTag& tag);
/// series,t,value (one row per sample and series, for plotting tools)
void write_long_csv(std::ostream& out, const RadiationRecord& record, const OutputTag& tag);

/// Binary grid dump: the line "SEPBIC-GRID 1", then "key=value" header lines,
/// the line "end", then `count` little-endian doubles (complex values as
/// interleaved real/imaginary pairs).
struct GridDump {
  std::map<std::string, std::string> header;
  std::vector<double> data;
};

void write_grid_dump(std::ostream& out, const GridDump& dump);
GridDump read_grid_dump(std::istream& in);

/// Selected bound states of one axis, one contiguous block per state.
GridDump wavefunction_dump(const Spectrum1D& spectrum, const std::vector<std::size_t>& states, const OutputTag& tag);
/// Complex 2D field snapshot with step and time.
GridDump field_dump(const ComplexField2D& psi, std::size_t step, double time, const OutputTag& tag);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sepbic
