#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcl/errors.hpp"

namespace rcl::cli {

inline constexpr const char* kExperiments[] = {"circular", "thickness", "farfield", "rect", "lshape"};

/// Every parameter of a run. Defaults depend on the experiment.
struct RunConfig {
  std::string experiment = "circular";
  std::vector<double> k;
  std::vector<int> N;  // circular: N1 = N2 = N per row; rect, lshape: element degree
  int N1 = 0;          // > 0 overrides the radial degree of the inner interval
  int N2 = 0;          // > 0 overrides the layer degree
  double R = 0.5;
  double a = 1.0;
  double b = 2.0;
  std::vector<double> d;  // thickness sweep: b = a + d
  double eps = 1e-12;
  double eps1 = 1e-12;
  int M = -1;
  double theta = 0.0;
  int samples = 20000;
  double rho_min = 1.0;
  double rho_max = 3.0;
  int rho_samples = 201;
  double decay_theta = 0.7853981633974483;
  double L1 = 1.0;
  double L2 = 1.0;
  double d1 = 0.3;
  double d2 = 0.3;
  std::vector<int> mesh;
  double memory_mb = 0.0;  // rect row budget; 0 means unlimited
  int field_mesh = 0;      // rect: > 0 exports the field of that mesh
  double width = 0.8;
  double cut_x = 0.0;
  double cut_y = 0.0;
  std::string out = "-";
  std::string field_out;

  /// Ordered key=value pairs; from_kv(to_kv()) reproduces the config.
  std::vector<std::pair<std::string, std::string>> to_kv() const;
  /// Throws ConfigError naming the field.
  void validate() const;
};

/// Defaults for one experiment; ConfigError for an unknown name.
RunConfig defaults_for(const std::string& experiment);

/// Applies key=value pairs on top of the experiment defaults. The
/// experiment key, if present, must match. Unknown keys and malformed values
/// throw ConfigError naming the key.
RunConfig from_kv(const std::string& experiment, const std::map<std::string, std::string>& kv);

/// Reads key=value lines; blank lines and lines starting with '#' are ignored.
std::map<std::string, std::string> parse_kv_text(const std::string& text);

/// A numerical stage failed; `stage` names it.
class StageError : public NumericalError {
 public:
  StageError(std::string stage, const std::string& what)
      : NumericalError(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct CommandOutput {
  std::string text;                    // CSV, or serialized JSON
  std::optional<nlohmann::json> field;  // written to field_out when present
};

CommandOutput cmd_circular(const RunConfig& config);
CommandOutput cmd_thickness(const RunConfig& config);
CommandOutput cmd_farfield(const RunConfig& config);
CommandOutput cmd_rect(const RunConfig& config);
CommandOutput cmd_lshape(const RunConfig& config);

/// Dispatches on config.experiment.
CommandOutput run_command(const RunConfig& config);

/// Scientific notation with 5 significant digits.
std::string format_sci(double v);

/// Metadata lines of a CSV output: the version and the config, '#'-prefixed.
std::map<std::string, std::string> read_csv_metadata(const std::string& csv);

}  // namespace rcl::cli
