#include "sepbic/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "sepbic/config.hpp"
#include "sepbic/errors.hpp"

namespace sepbic {

namespace {

void write_tag(std::ostream& out, const OutputTag& tag) {
  out << "# config_hash=" << tag.config_hash << "\n# convention=" << tag.convention << '\n';
}

std::string num(double v) { return format_double(v); }

std::string join_indices(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? ";" : "") + std::to_string(idx[k]);
  return s;
}

std::string axis_text(const std::optional<std::size_t>& a) { return a ? std::to_string(*a) : ""; }

}  // namespace

void write_spectrum_csv(std::ostream& out, const Spectrum1D& spectrum, const OutputTag& tag) {
  write_tag(out, tag);
  out << "# axis=" << spectrum.axis_label << "\nn,energy,parity,nodes\n";
  for (const auto& s : spectrum.bound_states)
    out << s.index << ',' << num(s.energy) << ',' << to_string(s.parity) << ',' << s.nodes << '\n';
}

void write_bic_catalog_csv(std::ostream& out, const BICSearchResult& bics, const OutputTag& tag) {
  write_tag(out, tag);
  out << "# total=" << bics.total << "\nindices,energy,threshold,n_channels,symmetry_protected\n";
  for (const auto& r : bics.records)
    out << join_indices(r.state.indices) << ',' << num(r.state.energy) << ',' << num(r.threshold) << ','
        << r.channels.size() << ',' << (r.symmetry_protected ? 1 : 0) << '\n';
}

void write_channels_csv(std::ostream& out, const BICSearchResult& bics, const SeparableSystem& sys,
                        const OutputTag& tag) {
  write_tag(out, tag);
  out << "bic,channel,onset,top,n_delocalized\n";
  for (const auto& r : bics.records)
    for (const auto& c : r.channels)
      out << join_indices(r.state.indices) << ',' << c.label(sys) << ',' << num(c.onset) << ',' << num(c.top) << ','
          << c.n_delocalized() << '\n';
}

void write_coupling_csv(std::ostream& out, const CouplingReport& report, const OutputTag& tag) {
  write_tag(out, tag);
  out << "# rate_convention=" << report.rate_convention << "\n# energy=" << num(report.energy)
      << "\n# total_width=" << num(report.total_width)
      << "\nchannel,family,matrix_element_sq,density,width,forbidden,forbidden_axis\n";
  for (const auto& c : report.channels)
    out << c.label << ',' << c.family << ',' << num(c.matrix_element_sq) << ',' << num(c.density) << ','
        << num(c.width) << ',' << (c.selection_rule_zero ? 1 : 0) << ',' << axis_text(c.forbidden_axis) << '\n';
}

void write_dimensionality_csv(std::ostream& out, const DimensionalityReport& report, const OutputTag& tag) {
  write_tag(out, tag);
  out << "# consistent=" << (report.consistent ? 1 : 0)
      << "\nchannel,family,predicted_forbidden,forbidden_axis,max_relative_element,numerically_forbidden\n";
  for (const auto& c : report.channels)
    out << c.label << ',' << c.family << ',' << (c.predicted_forbidden ? 1 : 0) << ',' << axis_text(c.forbidden_axis)
        << ',' << num(c.max_relative_element) << ',' << (c.numerically_forbidden ? 1 : 0) << '\n';
}

void write_observables_csv(std::ostream& out, const RadiationRecord& r, const OutputTag& tag) {
  write_tag(out, tag);
  out << "# directionality=" << num(r.directionality) << "\n# max_bookkeeping_error=" << num(r.max_bookkeeping_error)
      << "\nt,survival,interior_norm,total_norm,flux_plus_x,flux_minus_x,flux_plus_y,flux_minus_y\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    out << num(r.times[k]) << ',' << num(r.survival[k]) << ',' << num(r.interior_norm[k]) << ','
        << num(r.total_norm[k]);
    for (int s = 0; s < 4; ++s) out << ',' << num(r.cumulative_flux[s][k]);
    out << '\n';
  }
}

void write_long_csv(std::ostream& out, const RadiationRecord& r, const OutputTag& tag) {
  write_tag(out, tag);
  out << "series,t,value\n";
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"survival", &r.survival},           {"interior_norm", &r.interior_norm},
      {"total_norm", &r.total_norm},       {"flux_plus_x", &r.cumulative_flux[0]},
      {"flux_minus_x", &r.cumulative_flux[1]}, {"flux_plus_y", &r.cumulative_flux[2]},
      {"flux_minus_y", &r.cumulative_flux[3]}};
  for (const auto& [name, values] : series)
    for (std::size_t k = 0; k < r.times.size(); ++k) out << name << ',' << num(r.times[k]) << ',' << num((*values)[k]) << '\n';
}

void write_grid_dump(std::ostream& out, const GridDump& dump) {
  static_assert(std::endian::native == std::endian::little, "grid dumps assume a little-endian host");
  out << "SEPBIC-GRID 1\n";
  for (const auto& [k, v] : dump.header) {
    if (k == "count" || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ValidationError("invalid grid dump header entry '" + k + "'");
    out << k << '=' << v << '\n';
  }
  out << "count=" << dump.data.size() << "\nend\n";
  out.write(reinterpret_cast<const char*>(dump.data.data()), static_cast<std::streamsize>(dump.data.size() * sizeof(double)));
  if (!out) throw NumericalError("failed writing grid dump");
}

GridDump read_grid_dump(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "SEPBIC-GRID 1") throw ValidationError("not a grid dump");
  GridDump d;
  std::size_t count = 0;
  bool have_count = false;
  while (std::getline(in, line) && line != "end") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed grid dump header line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "count") {
      count = std::stoull(v);
      have_count = true;
    } else {
      d.header[k] = v;
    }
  }
  if (line != "end" || !have_count) throw ValidationError("truncated grid dump header");
  d.data.resize(count);
  in.read(reinterpret_cast<char*>(d.data.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) throw ValidationError("truncated grid dump data");
  return d;
}

GridDump wavefunction_dump(const Spectrum1D& spectrum, const std::vector<std::size_t>& states, const OutputTag& tag) {
  GridDump d;
  d.header["kind"] = "wavefunctions";
  d.header["config_hash"] = tag.config_hash;
  d.header["convention"] = tag.convention;
  d.header["axis"] = spectrum.axis_label;
  d.header["x_min"] = format_double(spectrum.grid.x_min());
  d.header["x_max"] = format_double(spectrum.grid.x_max());
  d.header["points"] = std::to_string(spectrum.grid.size());
  d.header["scalar"] = "real";
  std::string idx, en;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& s = spectrum.bound_states.at(states[k]);
    idx += (k ? "," : "") + std::to_string(s.index);
    en += (k ? "," : "") + format_double(s.energy);
    d.data.insert(d.data.end(), s.wavefunction.begin(), s.wavefunction.end());
  }
  d.header["states"] = idx;
  d.header["energies"] = en;
  return d;
}

GridDump field_dump(const ComplexField2D& psi, std::size_t step, double time, const OutputTag& tag) {
  GridDump d;
  d.header["kind"] = "field";
  d.header["config_hash"] = tag.config_hash;
  d.header["convention"] = tag.convention;
  d.header["step"] = std::to_string(step);
  d.header["time"] = format_double(time);
  d.header["x_min"] = format_double(psi.grid_x().x_min());
  d.header["x_max"] = format_double(psi.grid_x().x_max());
  d.header["nx"] = std::to_string(psi.nx());
  d.header["y_min"] = format_double(psi.grid_y().x_min());
  d.header["y_max"] = format_double(psi.grid_y().x_max());
  d.header["ny"] = std::to_string(psi.ny());
  d.header["scalar"] = "complex";
  d.header["layout"] = "x_fastest";
  d.data.reserve(2 * psi.data().size());
  for (const auto& v : psi.data()) d.data.push_back(v.real()), d.data.push_back(v.imag());
  return d;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw NumericalError("failed writing " + path);
}

}  // namespace sepbic
