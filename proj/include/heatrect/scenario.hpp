#ifndef HEATRECT_SCENARIO_HPP
#define HEATRECT_SCENARIO_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "heatrect/circuit.hpp"
#include "heatrect/steady_state.hpp"

namespace heatrect {

/// Invalid scenario configuration; the message starts with the JSON path of
/// the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

const std::vector<ScenarioInfo>& builtin_scenarios();

/// One swept parameter. Values are sorted ascending without duplicates.
struct Axis {
  std::string name;
  std::vector<double> values;
};

/// Parameter names accepted as sweep axes for a topology.
std::vector<std::string> axis_names(const CircuitSpec& spec);
/// Sets one named parameter; throws ConfigError for unknown names.
void apply_axis(CircuitSpec& spec, const std::string& name, double value);

/// `count` points from lo to hi, evenly spaced in log10 (both ends included).
std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> linear_grid(double lo, double hi, int count);

struct TrajectorySettings {
  double t_max = 15000.0;  ///< 0 disables the trajectory table
  double stride = 10.0;
};

struct ScenarioConfig {
  std::string scenario;
  CircuitSpec spec;                          ///< sweep and validation scenarios
  std::vector<Axis> axes;                    ///< sorted by name
  std::vector<std::string> circuits;         ///< convergence-study only
  std::map<std::string, CircuitSpec> specs;  ///< convergence-study, keyed by topology name
  ConvergenceProtocol protocol;
  TrajectorySettings trajectory;
  std::optional<std::string> output;
  int threads = 1;
  bool plot = false;
};

/// Built-in defaults for a scenario name.
ScenarioConfig default_config(const std::string& scenario);
/// Defaults of the named scenario with the JSON document applied on top.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);
nlohmann::ordered_json config_to_json(const ScenarioConfig& config);
/// Throws ConfigError if the configuration cannot run.
void validate_config(const ScenarioConfig& config);

/// Command-line overrides, applied after the config file.
struct RunOverrides {
  std::optional<std::string> output;
  std::optional<int> threads;
  std::optional<int> truncation;
  std::optional<RateMode> rate_mode;
  bool plot = false;
};

void apply_overrides(ScenarioConfig& config, const RunOverrides& overrides);

/// --out, then the config's "output", then $HEATRECT_OUT/<scenario>, then
/// ./heatrect-out/<scenario>.
std::string resolve_output_dir(const ScenarioConfig& config);

using Cell = std::variant<double, long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& column) const;
  std::string text(std::size_t row, const std::string& column) const;
};

/// Header plus one line per row; doubles as %.11e, integers as is.
std::string format_csv(const Table& table);

struct SweepResult {
  std::string scenario;
  Table table;                    ///< written to <scenario>.csv
  std::vector<Table> extra;       ///< written to <table name>.csv
  int nonconverged = 0;           ///< grid points flagged converged = 0
  std::vector<std::string> warnings;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

/// Evaluates every grid point (in parallel when config.threads > 1). Row order
/// is the lexicographic order of the axes and does not depend on threading.
SweepResult run_scenario(const ScenarioConfig& config);

/// Writes the CSV tables, metadata.json and, when config.plot is set, SVG
/// quick plots. Returns the paths written.
std::vector<std::string> write_outputs(const ScenarioConfig& config, const SweepResult& result,
                                       const std::string& directory);

nlohmann::ordered_json metadata_json(const ScenarioConfig& config, const SweepResult& result);

}  // namespace heatrect

#endif  // HEATRECT_SCENARIO_HPP
