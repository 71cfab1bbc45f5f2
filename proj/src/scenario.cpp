#include "heatrect/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "heatrect/circuit_json.hpp"
#include "heatrect/observables.hpp"
#include "heatrect/simulate.hpp"
#include "heatrect/svg_plot.hpp"

#ifndef HEATRECT_VERSION
#define HEATRECT_VERSION "unknown"
#endif

namespace heatrect {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kLogPoints = 40;

const std::vector<std::string> kCircuitNames = {"single", "parallel", "series", "bridge"};

bool is_scenario(const std::string& name) {
  for (const auto& s : builtin_scenarios())
    if (s.name == name) return true;
  return false;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || std::abs(x - out.back()) > 1e-12 * std::max(std::abs(x), std::abs(out.back())))
      out.push_back(x);
  return out;
}

Axis make_axis(std::string name, std::vector<double> values) { return {std::move(name), sorted_unique(std::move(values))}; }

void sort_axes(std::vector<Axis>& axes) {
  std::sort(axes.begin(), axes.end(), [](const Axis& a, const Axis& b) { return a.name < b.name; });
}

Topology scenario_topology(const std::string& scenario) {
  if (scenario == "parallel-sweep") return Topology::Parallel;
  if (scenario == "series-sweep") return Topology::Series;
  if (scenario == "bridge-anharmonicity" || scenario == "bridge-decoherence") return Topology::Bridge;
  if (scenario == "single-diode-validation") return Topology::SingleDiode;
  return Topology::Series;
}

CircuitSpec single_diode_defaults() {
  CircuitSpec spec = CircuitSpec::defaults(Topology::SingleDiode);
  spec.left_bath.Gamma = 20.0;
  spec.right_bath.Gamma = 20.0;
  return spec;
}

CircuitSpec circuit_defaults(const std::string& name) {
  const Topology t = topology_from_string(name);
  return t == Topology::SingleDiode ? single_diode_defaults() : CircuitSpec::defaults(t);
}

// --- JSON helpers ----------------------------------------------------------

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> get_range(const json& j, const std::string& path, bool log) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path + ": expected [from, to, count]");
  const double lo = get_number(j[0], path + "[0]");
  const double hi = get_number(j[1], path + "[1]");
  const int count = get_int(j[2], path + "[2]");
  try {
    return log ? log_grid(lo, hi, count) : linear_grid(lo, hi, count);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Axis parse_axis(const std::string& name, const json& j, const std::string& path) {
  if (j.is_array()) return make_axis(name, get_numbers(j, path));
  reject_unknown(j, {"values", "log", "linear", "include"}, path);
  const int forms = static_cast<int>(j.contains("values")) + static_cast<int>(j.contains("log")) +
                    static_cast<int>(j.contains("linear"));
  if (forms != 1) throw ConfigError(path + ": give exactly one of values, log, linear");
  std::vector<double> v;
  if (j.contains("values")) v = get_numbers(j["values"], path + ".values");
  if (j.contains("log")) v = get_range(j["log"], path + ".log", true);
  if (j.contains("linear")) v = get_range(j["linear"], path + ".linear", false);
  if (j.contains("include")) {
    const auto extra = get_numbers(j["include"], path + ".include");
    v.insert(v.end(), extra.begin(), extra.end());
  }
  return make_axis(name, std::move(v));
}

CircuitSpec parse_spec(const json& j, const CircuitSpec& base, const std::string& path) {
  if (j.is_object() && j.contains("topology") && j["topology"].is_string()) {
    const std::string t = j["topology"].get<std::string>();
    if (t != to_string(base.topology))
      throw ConfigError(path + ".topology: this scenario runs topology '" + to_string(base.topology) + "'");
  }
  try {
    return spec_from_json(j, base, path);
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
}

// --- formatting -------------------------------------------------------------

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

std::string format_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  if (const long* l = std::get_if<long>(&c)) return std::to_string(*l);
  return std::get<std::string>(c);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- worker pool ------------------------------------------------------------

void run_pool(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

// --- grid scenarios ---------------------------------------------------------

struct PointResult {
  std::vector<std::vector<Cell>> rows;
  bool converged = true;
};

std::vector<std::vector<double>> grid_points(const std::vector<Axis>& axes) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points)
      for (double v : axis.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

std::vector<std::string> result_columns(const std::string& scenario, const CircuitSpec& spec) {
  if (scenario == "parallel-sweep" || scenario == "series-sweep")
    return {"J_f", "J_r", "R", "p0_D1_f", "p0_D2_f", "p0_D1_r", "p0_D2_r", "block_f", "block_r"};
  if (scenario == "single-diode-validation")
    return {"bias", "J_full", "J_reduced", "relative_deviation", "blocks"};
  std::vector<std::string> c = {"J_net", "block",  "n_M1",   "n_M2",  "T_M1",
                                "T_M2",  "T_L",    "T_R",    "F_L_M1", "F_R_M2"};
  for (const char* mode : {"L", "M1", "M2", "R"})
    for (int k = 0; k < spec.ho_truncation; ++k) c.push_back(std::string("P_") + mode + "_" + std::to_string(k));
  return c;
}

PointResult eval_rectifier(const CircuitSpec& spec, const ConvergenceProtocol& protocol) {
  const BiasedRun r = run_biased(spec, protocol);
  PointResult out;
  out.converged = r.converged();
  out.rows.push_back({r.report.J_f, r.report.J_r, r.report.rectification, r.forward.final_state.population("D1", 0),
                      r.forward.final_state.population("D2", 0), r.reverse.final_state.population("D1", 0),
                      r.reverse.final_state.population("D2", 0), static_cast<long>(r.forward.converged_block),
                      static_cast<long>(r.reverse.converged_block)});
  return out;
}

PointResult eval_bridge(const CircuitSpec& spec, const ConvergenceProtocol& protocol) {
  const CircuitModel model = describe_circuit(spec);
  const EvolutionResult r = solve_circuit(model, markov_current_observable(model, Bias::Forward), protocol);
  const ModeReport m1 = mode_report(r.final_state.reduced({"M1"}), "M1");
  const ModeReport m2 = mode_report(r.final_state.reduced({"M2"}), "M2");
  const int N = spec.ho_truncation;
  const double n_L = spec.left_bath.mean_occupation();
  const double n_R = spec.right_bath.mean_occupation();
  const DensityMatrix rho_L = thermal_state("L", N, n_L);
  const DensityMatrix rho_R = thermal_state("R", N, n_R);

  std::vector<Cell> row = {r.converged_value,
                           static_cast<long>(r.converged_block),
                           m1.mean_n,
                           m2.mean_n,
                           m1.temperature.T,
                           m2.temperature.T,
                           effective_temperature(n_L).T,
                           effective_temperature(n_R).T,
                           fidelity(rho_L, m1.reduced),
                           fidelity(rho_R, m2.reduced)};
  for (const DensityMatrix* rho : {&rho_L, &m1.reduced, &m2.reduced, &rho_R})
    for (int k = 0; k < N; ++k) row.push_back(rho->data()(k, k).real());
  PointResult out;
  out.converged = r.converged;
  out.rows.push_back(std::move(row));
  return out;
}

PointResult eval_single(const CircuitSpec& spec, const ConvergenceProtocol& protocol) {
  PointResult out;
  for (const auto& c : validate_single_diode(spec, protocol)) {
    out.converged = out.converged && c.converged;
    out.rows.push_back({c.bias, c.full, c.reduced, c.relative_deviation, static_cast<long>(c.blocks)});
  }
  return out;
}

SweepResult run_grid(const ScenarioConfig& config) {
  SweepResult result;
  result.scenario = config.scenario;
  result.table.name = config.scenario;
  for (const auto& a : config.axes) result.table.columns.push_back(a.name);
  for (const auto& c : result_columns(config.scenario, config.spec)) result.table.columns.push_back(c);
  result.table.columns.push_back("converged");
  result.table.columns.push_back("rate_mode");

  const auto points = grid_points(config.axes);
  std::vector<PointResult> results(points.size());
  std::vector<CircuitSpec> specs;
  std::set<std::string> warnings;
  for (const auto& p : points) {
    CircuitSpec s = config.spec;
    for (std::size_t k = 0; k < p.size(); ++k) apply_axis(s, config.axes[k].name, p[k]);
    for (const auto& w : s.warnings()) warnings.insert(w);
    specs.push_back(std::move(s));
  }

  run_pool(points.size(), config.threads, [&](std::size_t i) {
    const CircuitSpec& s = specs[i];
    switch (s.topology) {
      case Topology::Parallel:
      case Topology::Series: results[i] = eval_rectifier(s, config.protocol); break;
      case Topology::Bridge: results[i] = eval_bridge(s, config.protocol); break;
      case Topology::SingleDiode: results[i] = eval_single(s, config.protocol); break;
    }
  });

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!results[i].converged) ++result.nonconverged;
    for (auto& r : results[i].rows) {
      std::vector<Cell> row;
      for (double v : points[i]) row.push_back(v);
      for (auto& c : r) row.push_back(std::move(c));
      row.push_back(static_cast<long>(results[i].converged));
      row.push_back(to_string(specs[i].bridge_rate_mode));
      result.table.rows.push_back(std::move(row));
    }
  }
  result.warnings.assign(warnings.begin(), warnings.end());

  if (config.scenario == "parallel-sweep" || config.scenario == "series-sweep") {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.rows.size(); ++i)
      if (result.table.number(i, "R") > result.table.number(best, "R")) best = i;
    if (!result.table.rows.empty()) {
      ordered_json at = ordered_json::object();
      for (const auto& a : config.axes) at[a.name] = result.table.number(best, a.name);
      result.summary["max_R"] = result.table.number(best, "R");
      result.summary["max_R_at"] = at;
    }
  }
  return result;
}

// --- convergence study ------------------------------------------------------

SweepResult run_convergence_study(const ScenarioConfig& config) {
  SweepResult result;
  result.scenario = config.scenario;
  result.table.name = config.scenario;
  result.table.columns = {"circuit", "bias", "block", "J_n", "rel_change", "converged_block", "converged",
                          "rate_mode"};
  Table trajectory{config.scenario + "_trajectory", {"circuit", "bias", "time", "current"}, {}};

  struct Task {
    std::string circuit;
    Bias bias;
    CircuitSpec spec;
    CircuitModel model;
  };
  std::vector<Task> tasks;
  std::set<std::string> warnings;
  for (const auto& name : config.circuits) {
    const CircuitSpec& s = config.specs.at(name);
    for (const auto& w : s.warnings()) warnings.insert(name + ": " + w);
    for (Bias b : {Bias::Forward, Bias::Reverse}) {
      CircuitSpec biased = b == Bias::Forward ? s : reversed(s);
      CircuitModel model = describe_circuit(biased);
      tasks.push_back({name, b, std::move(biased), std::move(model)});
    }
  }

  const bool with_trajectory = config.trajectory.t_max > 0.0;
  std::vector<EvolutionResult> runs(tasks.size());
  std::vector<std::vector<TrajectorySample>> samples(tasks.size());
  const std::size_t jobs = tasks.size() * (with_trajectory ? 2 : 1);
  run_pool(jobs, config.threads, [&](std::size_t j) {
    const Task& t = tasks[j % tasks.size()];
    const auto components = circuit_components(t.model, markov_current_observable(t.model, t.bias));
    if (j < tasks.size())
      runs[j] = run_convergence_protocol(components, t.model.layout(), config.protocol);
    else
      samples[j - tasks.size()] = sample_trajectory(components, config.trajectory.t_max, config.trajectory.stride,
                                                    config.protocol.steps_per_period, config.protocol.static_dt);
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const auto& r = runs[i];
    if (!r.converged) ++result.nonconverged;
    for (std::size_t n = 0; n < r.block_averages.size(); ++n) {
      const double J = r.block_averages[n];
      const double rel = n == 0 ? std::nan("")
                                : std::abs(J - r.block_averages[n - 1]) / std::abs(r.block_averages[n - 1]);
      result.table.rows.push_back({t.circuit, to_string(t.bias), static_cast<long>(n), J, rel,
                                   static_cast<long>(r.converged_block), static_cast<long>(r.converged),
                                   to_string(t.spec.bridge_rate_mode)});
    }
    result.summary[t.circuit][to_string(t.bias)] = {{"converged_block", r.converged_block},
                                                    {"J", r.converged_value},
                                                    {"converged", r.converged}};
    for (const auto& s : samples[i]) trajectory.rows.push_back({t.circuit, to_string(t.bias), s.time, s.values[0]});
  }
  if (with_trajectory) result.extra.push_back(std::move(trajectory));
  result.warnings.assign(warnings.begin(), warnings.end());
  return result;
}

// --- plots --------------------------------------------------------------------

struct PlotRecipe {
  std::string suffix;
  std::vector<std::string> y;
  std::string y_label;
  bool log_y;
};

std::vector<PlotRecipe> plot_recipes(const std::string& scenario) {
  if (scenario == "parallel-sweep" || scenario == "series-sweep")
    return {{"rectification", {"R"}, "R", true}, {"currents", {"J_f", "J_r"}, "current (J)", false}};
  if (scenario == "bridge-anharmonicity" || scenario == "bridge-decoherence")
    return {{"temperature", {"T_M1", "T_M2"}, "T (omega)", false},
            {"fidelity", {"F_L_M1", "F_R_M2"}, "fidelity", false}};
  return {};
}

std::string axis_label(const std::string& name) {
  if (name.rfind("delta_omega", 0) == 0 || name == "gamma_dec") return name + " (J)";
  return name;
}

std::vector<PlotSeries> grouped_series(const Table& table, const std::vector<Axis>& axes, const std::string& y) {
  const std::string& x = axes.back().name;
  std::map<std::vector<double>, PlotSeries> groups;
  std::vector<std::vector<double>> order;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<double> key;
    std::string name = y;
    for (std::size_t k = 0; k + 1 < axes.size(); ++k) {
      key.push_back(table.number(i, axes[k].name));
      char buf[64];
      std::snprintf(buf, sizeof buf, " %s=%g", axes[k].name.c_str(), key.back());
      name += buf;
    }
    auto [it, fresh] = groups.try_emplace(key, PlotSeries{name, {}, {}});
    if (fresh) order.push_back(key);
    it->second.x.push_back(table.number(i, x));
    it->second.y.push_back(table.number(i, y));
  }
  std::vector<PlotSeries> out;
  for (const auto& k : order) out.push_back(groups.at(k));
  return out;
}

bool log_spaced(const Axis& a) {
  return a.values.size() > 2 && a.values.front() > 0.0 && a.values.back() / a.values.front() >= 20.0;
}

std::vector<std::pair<std::string, std::string>> make_plots(const ScenarioConfig& config, const SweepResult& r) {
  std::vector<std::pair<std::string, std::string>> out;
  if (config.scenario == "convergence-study") {
    std::map<std::string, PlotSeries> by_run;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
      const std::string key = r.table.text(i, "circuit") + " " + r.table.text(i, "bias");
      auto [it, fresh] = by_run.try_emplace(key, PlotSeries{key, {}, {}});
      if (fresh) order.push_back(key);
      it->second.x.push_back(r.table.number(i, "block"));
      it->second.y.push_back(std::abs(r.table.number(i, "J_n")));
    }
    std::vector<PlotSeries> series;
    for (const auto& k : order) series.push_back(by_run.at(k));
    out.emplace_back(config.scenario + "_blocks.svg",
                     line_plot_svg(series, {"block averages", "block n", "|J_n| (J)", false, true}));
    return out;
  }
  if (config.axes.empty()) return out;
  const Axis& x = config.axes.back();
  for (const auto& recipe : plot_recipes(config.scenario)) {
    std::vector<PlotSeries> series;
    for (const auto& y : recipe.y) {
      auto s = grouped_series(r.table, config.axes, y);
      series.insert(series.end(), s.begin(), s.end());
    }
    out.emplace_back(config.scenario + "_" + recipe.suffix + ".svg",
                     line_plot_svg(series, {config.scenario + ": " + recipe.suffix, axis_label(x.name),
                                            recipe.y_label, log_spaced(x), recipe.log_y}));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<ScenarioInfo>& builtin_scenarios() {
  static const std::vector<ScenarioInfo> list = {
      {"parallel-sweep", "parallel diodes: J_f, J_r and R over delta_omega_D1 x delta_omega_D2"},
      {"series-sweep", "series diodes: J_f, J_r, R and ground-state populations over delta_omega_D1 x delta_omega_D2"},
      {"bridge-anharmonicity", "bridge rectifier: temperatures, fidelities and populations of M1/M2 over delta_omega"},
      {"bridge-decoherence", "bridge rectifier: temperatures and fidelities over gamma_dec x delta_omega"},
      {"convergence-study", "block-averaged currents and time traces for forward and reverse bias"},
      {"single-diode-validation", "full [L, D1, R] model against the rate-reduced single qutrit"},
  };
  return list;
}

std::vector<std::string> axis_names(const CircuitSpec& spec) {
  std::vector<std::string> out = {"delta_omega", "J_prime", "gamma_dec", "Gamma", "Gamma_L", "Gamma_R",
                                  "n_L",         "n_R",     "T_L",       "T_R",   "ho_truncation"};
  for (const auto& [label, p] : spec.diodes)
    for (const char* base : {"delta_omega_", "J_", "J_prime_"}) out.push_back(base + label);
  return out;
}

void apply_axis(CircuitSpec& spec, const std::string& name, double value) {
  auto per_diode = [&](const std::string& prefix, double DiodeParams::*field) {
    if (name.rfind(prefix, 0) != 0) return false;
    const std::string label = name.substr(prefix.size());
    auto it = spec.diodes.find(label);
    if (it == spec.diodes.end()) return false;
    it->second.*field = value;
    return true;
  };
  if (name == "delta_omega") {
    for (auto& [l, p] : spec.diodes) p.delta_omega = value;
  } else if (name == "J_prime") {
    for (auto& [l, p] : spec.diodes) p.J_prime = value;
  } else if (name == "gamma_dec") {
    spec.gamma_dec = value;
  } else if (name == "Gamma") {
    spec.left_bath.Gamma = value;
    spec.right_bath.Gamma = value;
  } else if (name == "Gamma_L") {
    spec.left_bath.Gamma = value;
  } else if (name == "Gamma_R") {
    spec.right_bath.Gamma = value;
  } else if (name == "n_L") {
    spec.left_bath = BathParams::with_occupation(value, spec.left_bath.Gamma);
  } else if (name == "n_R") {
    spec.right_bath = BathParams::with_occupation(value, spec.right_bath.Gamma);
  } else if (name == "T_L") {
    spec.left_bath = BathParams::with_temperature(value, spec.left_bath.Gamma);
  } else if (name == "T_R") {
    spec.right_bath = BathParams::with_temperature(value, spec.right_bath.Gamma);
  } else if (name == "ho_truncation") {
    if (value != std::round(value)) throw ConfigError("axes." + name + ": values must be integers");
    spec.ho_truncation = static_cast<int>(value);
  } else if (!per_diode("delta_omega_", &DiodeParams::delta_omega) && !per_diode("J_prime_", &DiodeParams::J_prime) &&
             !per_diode("J_", &DiodeParams::J)) {
    throw ConfigError("axes." + name + ": unknown parameter for topology '" + to_string(spec.topology) + "'");
  }
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log grid needs 0 < from <= to");
  if (count < 1) throw std::invalid_argument("grid needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> v;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < count; ++k) v.push_back(std::pow(10.0, a + (b - a) * k / (count - 1)));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (!(hi >= lo)) throw std::invalid_argument("linear grid needs from <= to");
  if (count < 1) throw std::invalid_argument("grid needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> v;
  for (int k = 0; k < count; ++k) v.push_back(lo + (hi - lo) * k / (count - 1));
  v.back() = hi;
  return v;
}

ScenarioConfig default_config(const std::string& scenario) {
  if (!is_scenario(scenario)) throw ConfigError("scenario: unknown scenario '" + scenario + "'");
  ScenarioConfig c;
  c.scenario = scenario;
  c.spec = scenario == "single-diode-validation" ? single_diode_defaults()
                                                 : CircuitSpec::defaults(scenario_topology(scenario));
  const std::vector<double> dw1 = {100.0, 200.0, 300.0};
  if (scenario == "parallel-sweep") {
    c.axes = {make_axis("delta_omega_D1", dw1), make_axis("delta_omega_D2", log_grid(50.0, 500.0, kLogPoints))};
  } else if (scenario == "series-sweep") {
    // The reverse-current peaks at delta_omega_D1/2 and delta_omega_D1 are narrow;
    // those points are added to the log grid.
    auto dw2 = log_grid(50.0, 500.0, kLogPoints);
    for (double v : {50.0, 100.0, 150.0, 200.0, 300.0}) dw2.push_back(v);
    c.axes = {make_axis("delta_omega_D1", dw1), make_axis("delta_omega_D2", dw2)};
  } else if (scenario == "bridge-anharmonicity") {
    c.axes = {make_axis("delta_omega", log_grid(10.0, 500.0, kLogPoints))};
  } else if (scenario == "bridge-decoherence") {
    c.axes = {make_axis("delta_omega", dw1), make_axis("gamma_dec", log_grid(1e-4, 1e-1, kLogPoints))};
  } else if (scenario == "convergence-study") {
    c.circuits = {"series", "bridge"};
    for (const auto& name : c.circuits) c.specs[name] = circuit_defaults(name);
  }
  sort_axes(c.axes);
  return c;
}

ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("(root): expected a JSON object");
  if (!j.contains("scenario")) throw ConfigError("scenario: missing");
  if (!j["scenario"].is_string()) throw ConfigError("scenario: expected a string");
  const std::string name = j["scenario"].get<std::string>();
  if (!is_scenario(name)) throw ConfigError("scenario: unknown scenario '" + name + "' (see `heatrect scenarios`)");
  ScenarioConfig c = default_config(name);
  const bool study = name == "convergence-study";

  std::set<std::string> allowed = {"scenario", "protocol", "output", "threads", "plot"};
  if (study) allowed.insert({"circuits", "specs", "trajectory"});
  else allowed.insert({"spec", "axes"});
  reject_unknown(j, allowed, "");

  if (j.contains("spec")) c.spec = parse_spec(j["spec"], c.spec, "spec");

  if (j.contains("axes")) {
    const auto& a = j["axes"];
    if (!a.is_object()) throw ConfigError("axes: expected an object");
    c.axes.clear();
    for (const auto& [axis, value] : a.items()) c.axes.push_back(parse_axis(axis, value, "axes." + axis));
    sort_axes(c.axes);
  }

  if (j.contains("circuits")) {
    const auto& a = j["circuits"];
    if (!a.is_array()) throw ConfigError("circuits: expected an array of circuit names");
    c.circuits.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string path = "circuits[" + std::to_string(i) + "]";
      if (!a[i].is_string()) throw ConfigError(path + ": expected a string");
      const std::string circuit = a[i].get<std::string>();
      if (std::find(kCircuitNames.begin(), kCircuitNames.end(), circuit) == kCircuitNames.end())
        throw ConfigError(path + ": unknown circuit '" + circuit + "'");
      if (std::find(c.circuits.begin(), c.circuits.end(), circuit) != c.circuits.end())
        throw ConfigError(path + ": duplicate circuit '" + circuit + "'");
      c.circuits.push_back(circuit);
      if (!c.specs.count(circuit)) c.specs[circuit] = circuit_defaults(circuit);
    }
  }
  if (j.contains("specs")) {
    const auto& s = j["specs"];
    if (!s.is_object()) throw ConfigError("specs: expected an object keyed by circuit name");
    for (const auto& [circuit, value] : s.items()) {
      if (std::find(c.circuits.begin(), c.circuits.end(), circuit) == c.circuits.end())
        throw ConfigError("specs." + circuit + ": not listed in circuits");
      c.specs[circuit] = parse_spec(value, c.specs.at(circuit), "specs." + circuit);
    }
  }

  if (j.contains("protocol")) {
    const auto& p = j["protocol"];
    reject_unknown(p, {"block_length", "average_window", "rel_tol", "abs_tol", "max_blocks", "steps_per_period",
                       "static_dt"},
                   "protocol");
    auto& q = c.protocol;
    if (p.contains("block_length")) q.block_length = get_number(p["block_length"], "protocol.block_length");
    if (p.contains("average_window")) q.average_window = get_number(p["average_window"], "protocol.average_window");
    if (p.contains("rel_tol")) q.rel_tol = get_number(p["rel_tol"], "protocol.rel_tol");
    if (p.contains("abs_tol")) q.abs_tol = get_number(p["abs_tol"], "protocol.abs_tol");
    if (p.contains("max_blocks")) q.max_blocks = get_int(p["max_blocks"], "protocol.max_blocks");
    if (p.contains("steps_per_period"))
      q.steps_per_period = get_int(p["steps_per_period"], "protocol.steps_per_period");
    if (p.contains("static_dt")) q.static_dt = get_number(p["static_dt"], "protocol.static_dt");
  }
  if (j.contains("trajectory")) {
    const auto& t = j["trajectory"];
    reject_unknown(t, {"t_max", "stride"}, "trajectory");
    if (t.contains("t_max")) c.trajectory.t_max = get_number(t["t_max"], "trajectory.t_max");
    if (t.contains("stride")) c.trajectory.stride = get_number(t["stride"], "trajectory.stride");
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a string");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
  if (j.contains("plot")) {
    if (!j["plot"].is_boolean()) throw ConfigError("plot: expected true or false");
    c.plot = j["plot"].get<bool>();
  }
  validate_config(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

void validate_config(const ScenarioConfig& c) {
  if (!is_scenario(c.scenario)) throw ConfigError("scenario: unknown scenario '" + c.scenario + "'");
  try {
    c.protocol.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }
  if (c.threads < 1) throw ConfigError("threads: must be >= 1");

  if (c.scenario == "convergence-study") {
    if (!c.axes.empty()) throw ConfigError("axes: convergence-study takes no sweep axes");
    if (c.circuits.empty()) throw ConfigError("circuits: empty");
    for (const auto& name : c.circuits) {
      auto it = c.specs.find(name);
      if (it == c.specs.end()) throw ConfigError("specs." + name + ": missing");
      if (to_string(it->second.topology) != name)
        throw ConfigError("specs." + name + ".topology: must be '" + name + "'");
      try {
        it->second.validate();
      } catch (const SpecError& e) {
        throw ConfigError("specs." + name + "." + e.what());
      }
      if (it->second.topology == Topology::SingleDiode && it->second.ho_truncation > 4)
        throw ConfigError("specs.single.ho_truncation: the full single-diode model needs ho_truncation <= 4");
    }
    if (!(c.trajectory.t_max >= 0.0)) throw ConfigError("trajectory.t_max: must be >= 0");
    if (!(c.trajectory.stride > 0.0)) throw ConfigError("trajectory.stride: must be positive");
    return;
  }

  if (to_string(c.spec.topology) != to_string(scenario_topology(c.scenario)))
    throw ConfigError("spec.topology: scenario '" + c.scenario + "' runs topology '" +
                      to_string(scenario_topology(c.scenario)) + "'");
  try {
    c.spec.validate();
  } catch (const SpecError& e) {
    throw ConfigError(std::string("spec.") + e.what());
  }
  std::set<std::string> seen;
  for (const auto& a : c.axes) {
    const std::string path = "axes." + a.name;
    if (!seen.insert(a.name).second) throw ConfigError(path + ": duplicate axis");
    if (a.values.empty()) throw ConfigError(path + ": empty grid");
    for (double v : a.values) {
      if (!std::isfinite(v)) throw ConfigError(path + ": values must be finite");
      CircuitSpec s = c.spec;
      apply_axis(s, a.name, v);
      try {
        s.validate();
      } catch (const SpecError& e) {
        throw ConfigError(path + " = " + format_number(v) + ": " + e.what());
      }
      if (s.topology == Topology::SingleDiode && s.ho_truncation > 4)
        throw ConfigError(path + ": the full single-diode model needs ho_truncation <= 4");
    }
  }
  if (c.spec.topology == Topology::SingleDiode && c.spec.ho_truncation > 4)
    throw ConfigError("spec.ho_truncation: the full single-diode model needs ho_truncation <= 4");
}

ordered_json config_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["scenario"] = c.scenario;
  if (c.scenario == "convergence-study") {
    j["circuits"] = c.circuits;
    ordered_json specs = ordered_json::object();
    for (const auto& name : c.circuits) specs[name] = spec_to_json(c.specs.at(name));
    j["specs"] = specs;
    j["trajectory"] = {{"t_max", c.trajectory.t_max}, {"stride", c.trajectory.stride}};
  } else {
    j["spec"] = spec_to_json(c.spec);
    ordered_json axes = ordered_json::object();
    for (const auto& a : c.axes) axes[a.name] = a.values;
    j["axes"] = axes;
  }
  const auto& p = c.protocol;
  j["protocol"] = {{"block_length", p.block_length},         {"average_window", p.average_window},
                   {"rel_tol", p.rel_tol},                   {"abs_tol", p.abs_tol},
                   {"max_blocks", p.max_blocks},             {"steps_per_period", p.steps_per_period},
                   {"static_dt", p.static_dt}};
  if (c.output) j["output"] = *c.output;
  j["threads"] = c.threads;
  j["plot"] = c.plot;
  return j;
}

void apply_overrides(ScenarioConfig& c, const RunOverrides& o) {
  if (o.output) c.output = o.output;
  if (o.threads) c.threads = *o.threads;
  auto touch = [&](CircuitSpec& s) {
    if (o.truncation) s.ho_truncation = *o.truncation;
    if (o.rate_mode) s.bridge_rate_mode = *o.rate_mode;
  };
  touch(c.spec);
  for (auto& [name, s] : c.specs) touch(s);
  if (o.truncation)
    c.axes.erase(std::remove_if(c.axes.begin(), c.axes.end(), [](const Axis& a) { return a.name == "ho_truncation"; }),
                 c.axes.end());
  c.plot = c.plot || o.plot;
  validate_config(c);
}

std::string resolve_output_dir(const ScenarioConfig& c) {
  if (c.output) return *c.output;
  if (const char* env = std::getenv("HEATRECT_OUT"); env && *env)
    return (std::filesystem::path(env) / c.scenario).string();
  return (std::filesystem::path("heatrect-out") / c.scenario).string();
}

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("table '" + this->name + "' has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const double* d = std::get_if<double>(&c)) return *d;
  if (const long* l = std::get_if<long>(&c)) return static_cast<double>(*l);
  throw std::invalid_argument("column '" + name + "' is not numeric");
}

std::string Table::text(std::size_t row, const std::string& name) const {
  return format_cell(rows.at(row).at(column(name)));
}

std::string format_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
    os << '\n';
  }
  return os.str();
}

SweepResult run_scenario(const ScenarioConfig& config) {
  validate_config(config);
  return config.scenario == "convergence-study" ? run_convergence_study(config) : run_grid(config);
}

ordered_json metadata_json(const ScenarioConfig& config, const SweepResult& result) {
  ordered_json m;
  m["scenario"] = config.scenario;
  m["version"] = HEATRECT_VERSION;
  m["created_utc"] = utc_timestamp();
  std::set<std::string> modes;
  if (config.scenario == "convergence-study")
    for (const auto& [name, s] : config.specs) modes.insert(to_string(s.bridge_rate_mode));
  else
    modes.insert(to_string(config.spec.bridge_rate_mode));
  m["rate_mode"] = modes.size() == 1 ? ordered_json(*modes.begin()) : ordered_json(modes);
  m["config"] = config_to_json(config);
  m["tolerances"] = {{"rel_tol", config.protocol.rel_tol},
                     {"abs_tol", config.protocol.abs_tol},
                     {"steady_state_residual", 1e-8},
                     {"null_space_cutoff", 1e-10},
                     {"trace_renormalization", 1e-10}};
  m["model_choices"] = {
      {"initial_state", "all modes in their ground state"},
      {"bridge_D2_rates", "modulated when rate_mode is physical, static when paper"},
      {"bridge_D3_D4_rates", "static"},
      {"bridge_current", "net excitation flow into the right bath"},
      {"block_alignment", "block length and window rounded to whole drive periods"},
      {"default_grids", "40 points per log axis; series delta_omega_D2 adds 50, 100, 150, 200, 300"}};
  m["rows"] = result.table.rows.size();
  m["nonconverged"] = result.nonconverged;
  m["warnings"] = result.warnings;
  m["summary"] = result.summary;
  return m;
}

std::vector<std::string> write_outputs(const ScenarioConfig& config, const SweepResult& result,
                                       const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  std::vector<std::string> written;
  auto write = [&](const std::string& file, const std::string& content) {
    const fs::path p = fs::path(directory) / file;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    written.push_back(p.string());
  };
  write(result.table.name + ".csv", format_csv(result.table));
  for (const auto& t : result.extra) write(t.name + ".csv", format_csv(t));
  write("metadata.json", metadata_json(config, result).dump(2) + "\n");
  if (config.plot)
    for (const auto& [file, svg] : make_plots(config, result)) write(file, svg);
  return written;
}

}  // namespace heatrect
