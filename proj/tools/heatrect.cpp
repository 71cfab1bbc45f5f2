#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heatrect/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitFailure = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum heat rectification circuits: parameter sweeps and steady states"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(HEATRECT_VERSION));

  std::string config_path;
  heatrect::RunOverrides overrides;
  std::string out_dir;
  int threads = 0;
  int truncation = 0;
  std::string rate_mode;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run a scenario config and write CSV, metadata.json and plots");
  run->add_option("config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (default: config 'output', then $HEATRECT_OUT/<scenario>)");
  run->add_option("--threads", threads, "worker threads over grid points")->check(CLI::PositiveNumber);
  run->add_option("--truncation", truncation, "oscillator truncation N")->check(CLI::Range(2, 64));
  run->add_option("--rate-mode", rate_mode, "bridge D2 rate form")->check(CLI::IsMember({"physical", "paper"}));
  run->add_flag("--plot", overrides.plot, "write SVG quick plots");
  run->add_flag("-q,--quiet", quiet, "suppress diagnostics");

  auto* validate = app.add_subcommand("validate", "check a scenario config without running it");
  validate->add_option("config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);

  auto* scenarios = app.add_subcommand("scenarios", "list built-in scenarios");
  std::string dump;
  scenarios->add_option("--dump", dump, "print the default config of one scenario");

  CLI11_PARSE(app, argc, argv);

  try {
    if (scenarios->parsed()) {
      if (!dump.empty()) {
        std::cout << heatrect::config_to_json(heatrect::default_config(dump)).dump(2) << '\n';
        return 0;
      }
      for (const auto& s : heatrect::builtin_scenarios()) std::printf("%-24s %s\n", s.name.c_str(), s.description.c_str());
      return 0;
    }

    heatrect::ScenarioConfig config = heatrect::load_config(config_path);

    if (validate->parsed()) {
      for (const auto& w : config.spec.warnings()) std::cerr << "warning: " << w << '\n';
      std::cout << config_path << ": ok (" << config.scenario << ")\n";
      return 0;
    }

    if (!out_dir.empty()) overrides.output = out_dir;
    if (threads > 0) overrides.threads = threads;
    if (truncation > 0) overrides.truncation = truncation;
    if (!rate_mode.empty()) overrides.rate_mode = heatrect::rate_mode_from_string(rate_mode);
    heatrect::apply_overrides(config, overrides);
    if (quiet) heatrect::set_log_sink({});

    const std::string dir = heatrect::resolve_output_dir(config);
    const heatrect::SweepResult result = heatrect::run_scenario(config);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& path : heatrect::write_outputs(config, result, dir)) std::cout << path << '\n';

    if (result.nonconverged > 0) {
      std::cerr << "error: " << result.nonconverged << " grid point(s) did not converge within "
                << config.protocol.max_blocks << " blocks; see the 'converged' column\n";
      return kExitNonConvergence;
    }
    return 0;
  } catch (const heatrect::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const heatrect::SpecError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
