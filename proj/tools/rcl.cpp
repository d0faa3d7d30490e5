#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "rcl/cli.hpp"

namespace {

struct Flag {
  const char* key;
  const char* help;
};

constexpr Flag kShared[] = {
    {"k", "wavenumber(s), comma separated"},
    {"eps", "layer damping threshold"},
    {"eps1", "mode cutoff threshold"},
    {"out", "output file, '-' for stdout"},
    {"theta", "angle of the error slice or far-field curve"},
    {"samples", "samples per interval for maximum errors"},
};

constexpr Flag kCircular[] = {
    {"R", "scatterer radius"},       {"a", "interface radius"},
    {"b", "truncation radius"},      {"N", "degree sweep, N1 = N2 = N"},
    {"N1", "inner-interval degree"}, {"N2", "layer degree"},
    {"M", "mode cutoff, -1 for automatic"},
};

constexpr Flag kRect[] = {
    {"L1", "inner half-width in x"},  {"L2", "inner half-width in y"},
    {"d1", "layer width in x"},       {"d2", "layer width in y"},
    {"N", "element degree"},          {"mesh", "mesh sizes, comma separated"},
};

void write(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw rcl::ConfigError("out: cannot open '" + path + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed-layer Helmholtz scattering solver"};
  app.set_version_flag("--version", std::string(RCL_VERSION));
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_files;
  auto add = [&](CLI::App* sub, const Flag& f) {
    sub->add_option("--" + std::string(f.key), values[sub->get_name()][f.key], f.help);
  };

  const std::map<std::string, std::string> about = {
      {"circular", "circular scatterer, degree sweep"},
      {"thickness", "circular scatterer, layer-thickness sweep"},
      {"farfield", "far-field recovery from the layer solution"},
      {"rect", "rectangular layer, square scatterer convergence study"},
      {"lshape", "rectangular layer, L-shaped scatterer field"},
  };
  for (const char* name : rcl::cli::kExperiments) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_files[name], "key=value file; flags win");
    for (const Flag& f : kShared) add(sub, f);
    const std::string n = name;
    if (n == "circular" || n == "thickness" || n == "farfield") {
      for (const Flag& f : kCircular) add(sub, f);
    } else {
      for (const Flag& f : kRect) add(sub, f);
    }
    if (n == "thickness") add(sub, {"d", "layer thicknesses, comma separated"});
    if (n == "farfield") {
      add(sub, {"rho_min", "start of the recovery interval"});
      add(sub, {"rho_max", "end of the recovery interval"});
      add(sub, {"rho_samples", "points on the recovery interval"});
      add(sub, {"decay_theta", "angle of the decay fit"});
    }
    if (n == "rect") {
      add(sub, {"memory_mb", "skip rows estimated above this budget"});
      add(sub, {"field_mesh", "export the field of this mesh size"});
      add(sub, {"field_out", "field JSON path"});
    }
    if (n == "lshape") {
      add(sub, {"width", "scatterer width"});
      add(sub, {"cut_x", "x of the removed corner block"});
      add(sub, {"cut_y", "y of the removed corner block"});
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  CLI::App* sub = app.get_subcommand(experiment);
  try {
    std::map<std::string, std::string> kv;
    if (!config_files[experiment].empty()) {
      std::ifstream f(config_files[experiment]);
      if (!f) throw rcl::ConfigError("config: cannot open '" + config_files[experiment] + "'");
      std::stringstream buf;
      buf << f.rdbuf();
      kv = rcl::cli::parse_kv_text(buf.str());
    }
    for (const auto& [key, value] : values[experiment]) {
      if (sub->count("--" + key) > 0) kv[key] = value;
    }
    const rcl::cli::RunConfig config = rcl::cli::from_kv(experiment, kv);
    if (config.field_mesh > 0 && config.field_out.empty()) {
      throw rcl::ConfigError("field_out: required with field_mesh");
    }
    const rcl::cli::CommandOutput output = rcl::cli::run_command(config);
    write(config.out, output.text);
    if (output.field) write(config.field_out, output.field->dump());
  } catch (const rcl::cli::StageError& e) {
    std::cerr << "rcl: numerical failure in " << e.what() << '\n';
    return 3;
  } catch (const rcl::ConfigError& e) {
    std::cerr << "rcl: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const rcl::GeometryError& e) {
    std::cerr << "rcl: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rcl: numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
