// Command-line front end: one subcommand per pipeline, all driven by configs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "sepbic/errors.hpp"
#include "sepbic/io.hpp"
#include "sepbic/scenarios.hpp"

using namespace sepbic;

namespace {

enum Exit { kOk = 0, kOther = 1, kValidation = 2, kNumerical = 3 };

struct Common {
  std::string config_file;
  std::string out_dir = "out";
  std::string convention;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "INI file merged over the preset")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--convention", c.convention, "kinetic convention")
      ->check(CLI::IsMember({"reduced", "half", "calibrate"}));
  cmd->add_option("--set", c.overrides, "override as section.key=value (repeatable)");
}

Config build_config(const std::string& preset, const Common& c) {
  Config cfg = scenario_preset(preset);
  if (!c.config_file.empty()) cfg.merge(Config::load(c.config_file));
  for (const auto& o : c.overrides) {
    const auto eq = o.find('='), dot = o.rfind('.', eq);
    if (eq == std::string::npos || dot == std::string::npos || dot == 0)
      throw ValidationError("--set expects section.key=value, got '" + o + "'");
    cfg.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
  }
  if (!c.convention.empty()) {
    const std::string name = cfg.get("scenario", "name");
    if (name == "tightbinding") {
      if (c.convention != "calibrate") throw ValidationError("tight-binding chains only accept --convention calibrate");
      cfg.set("lattice", "convention", "resolve");
    } else if (name == "paraxial" || name == "coldatom") {
      throw ValidationError("scenario '" + name + "' fixes its own kinetic coefficient");
    } else {
      cfg.set("system", "convention", c.convention);
    }
  }
  return cfg;
}

void report(const ScenarioResult& r) {
  std::cout << "scenario=" << r.name << "\nconfig_hash=" << r.config_hash << "\nconvention=" << r.convention
            << "\nout=" << r.out_dir << '\n';
  for (const auto& [k, v] : r.summary) std::cout << k << '=' << v << '\n';
}

int spectrum1d(const Common& c) {
  const Config cfg = build_config("gauss2d", c);
  validate_scenario_config(cfg);
  const auto conv = resolve_convention(cfg);
  const OutputTag tag{cfg.hash_hex(), conv.name()};
  std::cout << "config_hash=" << tag.config_hash << "\nconvention=" << tag.convention << '\n';
  for (const auto& a : axes_from_config(cfg)) {
    const auto sp = solve_bound_states(a.potential(), a.grid(), conv, {}, a.label);
    std::ostringstream csv;
    write_spectrum_csv(csv, sp, tag);
    const auto path = std::filesystem::path(c.out_dir) / ("spectrum_" + a.label + ".csv");
    write_text_file(path.string(), csv.str());
    std::cout << "levels_" << a.label << '=' << sp.size() << " file=" << path.string() << '\n';
  }
  return kOk;
}

int pipeline(const std::string& preset, const Common& c, const std::function<void(Config&)>& adjust) {
  Config cfg = build_config(preset, c);
  adjust(cfg);
  report(run_scenario(cfg, c.out_dir));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separable bound states in the continuum: spectra, BIC catalogs, couplings, propagation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common spec_opts, bic_opts, couple_opts, prop_opts, tb_opts, sc_opts;
  auto* spec = app.add_subcommand("spectrum1d", "bound spectra of each axis");
  add_common(spec, spec_opts);
  auto* bics = app.add_subcommand("bics", "certified BIC catalog and channel lists");
  add_common(bics, bic_opts);
  auto* couple = app.add_subcommand("couple", "golden-rule widths or dimensionality selection");
  add_common(couple, couple_opts);
  auto* prop = app.add_subcommand("propagate", "2D time-dependent radiation run");
  add_common(prop, prop_opts);
  auto* tb = app.add_subcommand("tb", "tight-binding defect lattice");
  add_common(tb, tb_opts);
  auto* sc = app.add_subcommand("scenario", "run a built-in scenario preset");
  add_common(sc, sc_opts);
  std::string scenario_name;
  sc->add_option("name", scenario_name, "preset name")->required()->check(CLI::IsMember(scenario_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*spec) return spectrum1d(spec_opts);
    if (*bics)
      return pipeline("gauss2d", bic_opts, [](Config& c) {
        c.set("perturbation", "kind", "none");
        c.set("propagation", "enabled", false);
      });
    if (*couple)
      return pipeline("gauss2d", couple_opts, [](Config& c) {
        if (c.get("perturbation", "kind", "none") == "none")
          throw ValidationError("couple needs [perturbation] kind (odd_x, even_y, even_z, even_xy, even_all)");
        c.set("propagation", "enabled", false);
      });
    if (*prop)
      return pipeline("gauss2d", prop_opts, [](Config& c) { c.set("propagation", "enabled", true); });
    if (*tb) return pipeline("tightbinding", tb_opts, [](Config&) {});
    if (*sc) return pipeline(scenario_name, sc_opts, [](Config&) {});
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const RangeError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
