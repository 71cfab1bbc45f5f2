#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "heatrect/scenario.hpp"
#include "heatrect/svg_plot.hpp"

using namespace heatrect;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ScenarioConfig small_series(int threads) {
  ScenarioConfig c = parse_config(json::parse(R"({
    "scenario": "series-sweep",
    "axes": {"delta_omega_D1": [300], "delta_omega_D2": [100, 150, 250]},
    "protocol": {"max_blocks": 6}
  })"));
  c.threads = threads;
  return c;
}

}  // namespace

TEST(Grids, LogAndLinear) {
  const auto g = log_grid(50, 500, 3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g.front(), 50.0);
  EXPECT_NEAR(g[1], std::sqrt(50.0 * 500.0), 1e-10);
  EXPECT_DOUBLE_EQ(g.back(), 500.0);
  EXPECT_EQ(linear_grid(0, 1, 5), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_THROW(log_grid(0, 10, 3), std::invalid_argument);
  EXPECT_THROW(log_grid(1, 10, 0), std::invalid_argument);
}

TEST(Config, DefaultsForEveryScenario) {
  ASSERT_EQ(builtin_scenarios().size(), 6u);
  for (const auto& s : builtin_scenarios()) {
    const ScenarioConfig c = default_config(s.name);
    EXPECT_NO_THROW(validate_config(c)) << s.name;
    EXPECT_NO_THROW(parse_config(config_to_json(c))) << s.name;
  }
  const ScenarioConfig p = default_config("parallel-sweep");
  ASSERT_EQ(p.axes.size(), 2u);
  EXPECT_EQ(p.axes[0].values, (std::vector<double>{100, 200, 300}));
  EXPECT_EQ(p.axes[1].values.size(), 40u);
  const ScenarioConfig s = default_config("series-sweep");
  for (double anchor : {50.0, 100.0, 150.0, 200.0, 300.0})
    EXPECT_NE(std::find(s.axes[1].values.begin(), s.axes[1].values.end(), anchor), s.axes[1].values.end());
  EXPECT_THROW(default_config("nope"), ConfigError);
}

TEST(Config, AxisFormsAreSortedAndDeduplicated) {
  const ScenarioConfig c = parse_config(json::parse(R"({
    "scenario": "series-sweep",
    "axes": {"delta_omega_D2": {"log": [100, 400, 3], "include": [150, 100]}, "delta_omega_D1": [300, 100, 300]}
  })"));
  ASSERT_EQ(c.axes.size(), 2u);
  EXPECT_EQ(c.axes[0].name, "delta_omega_D1");
  EXPECT_EQ(c.axes[0].values, (std::vector<double>{100, 300}));
  EXPECT_EQ(c.axes[1].values.size(), 4u);
  EXPECT_TRUE(std::is_sorted(c.axes[1].values.begin(), c.axes[1].values.end()));
}

TEST(Config, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "axes": {"delta_omega_D2": []}})")),
            "axes.delta_omega_D2: empty grid");
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "bogus": 1})")), "bogus: unknown key");
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "spec": {"diodes": {"D2": {"foo": 1}}}})")),
            "spec.diodes.D2.foo: unknown key");
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "protocol": {"max_blocks": "x"}})")),
            "protocol.max_blocks: expected an integer");
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "series-sweep", "spec": {"topology": "bridge"}})"))
                .rfind("spec.topology", 0),
            0u);
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "axes": {"delta_omega_D2": {"log": [1, 2]}}})")),
            "axes.delta_omega_D2.log: expected [from, to, count]");
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "parallel-sweep", "axes": {"warp": [1]}})")).rfind("axes.warp", 0),
            0u);
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "bridge-anharmonicity", "axes": {"delta_omega": [-5]}})"))
                .rfind("axes.delta_omega", 0),
            0u);
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "single-diode-validation", "spec": {"ho_truncation": 8}})"))
                .rfind("spec.ho_truncation", 0),
            0u);
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "nope"})")).rfind("scenario:", 0), 0u);
  EXPECT_EQ(config_error(json::parse(R"({"scenario": "convergence-study", "circuits": ["series", "series"]})")),
            "circuits[1]: duplicate circuit 'series'");
}

TEST(Config, OverridesAndOutputDirectory) {
  ScenarioConfig c = default_config("bridge-anharmonicity");
  RunOverrides o;
  o.truncation = 4;
  o.rate_mode = RateMode::PaperLiteral;
  o.threads = 3;
  apply_overrides(c, o);
  EXPECT_EQ(c.spec.ho_truncation, 4);
  EXPECT_EQ(c.spec.bridge_rate_mode, RateMode::PaperLiteral);
  EXPECT_EQ(c.threads, 3);

  c.output = "explicit";
  EXPECT_EQ(resolve_output_dir(c), "explicit");
  c.output.reset();
  ::setenv("HEATRECT_OUT", "/tmp/hr-root", 1);
  EXPECT_EQ(resolve_output_dir(c), "/tmp/hr-root/bridge-anharmonicity");
  ::unsetenv("HEATRECT_OUT");
  EXPECT_EQ(resolve_output_dir(c), "heatrect-out/bridge-anharmonicity");
}

TEST(Config, AxesSetParameters) {
  CircuitSpec s = CircuitSpec::defaults(Topology::Bridge);
  apply_axis(s, "delta_omega", 42.0);
  for (const auto& [name, d] : s.diodes) EXPECT_EQ(d.delta_omega, 42.0);
  apply_axis(s, "gamma_dec", 0.02);
  EXPECT_EQ(s.gamma_dec, 0.02);
  apply_axis(s, "n_R", 0.25);
  EXPECT_NEAR(s.right_bath.mean_occupation(), 0.25, 1e-14);
  EXPECT_THROW(apply_axis(s, "ho_truncation", 2.5), ConfigError);
  EXPECT_THROW(apply_axis(s, "delta_omega_D9", 1.0), ConfigError);
}

TEST(Csv, TwelveSignificantDigits) {
  Table t{"t", {"x", "k", "s"}, {{1.0 / 3.0, 7L, std::string("physical")}, {-2.5e-14, -1L, std::string("paper")}}};
  EXPECT_EQ(format_csv(t), "x,k,s\n3.33333333333e-01,7,physical\n-2.50000000000e-14,-1,paper\n");
  EXPECT_EQ(t.number(1, "x"), -2.5e-14);
  EXPECT_EQ(t.text(0, "s"), "physical");
  EXPECT_THROW(t.column("missing"), std::out_of_range);
}

TEST(Sweep, ParallelDefaultGrid) {
  const SweepResult r = run_scenario(default_config("parallel-sweep"));
  EXPECT_EQ(r.table.rows.size(), 120u);
  EXPECT_EQ(r.nonconverged, 0);
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    EXPECT_EQ(r.table.text(i, "rate_mode"), "physical");
    EXPECT_GT(r.table.number(i, "J_f"), 0.0);
    EXPECT_LT(r.table.number(i, "J_r"), 0.0);
  }
  // Rows follow the lexicographic order of (delta_omega_D1, delta_omega_D2).
  for (std::size_t i = 1; i < r.table.rows.size(); ++i) {
    const double a1 = r.table.number(i - 1, "delta_omega_D1"), b1 = r.table.number(i, "delta_omega_D1");
    EXPECT_TRUE(a1 < b1 || (a1 == b1 && r.table.number(i - 1, "delta_omega_D2") < r.table.number(i, "delta_omega_D2")));
  }
  EXPECT_TRUE(r.summary.contains("max_R"));
}

TEST(Sweep, ThreadingAndRerunsAreBitIdentical) {
  const SweepResult serial = run_scenario(small_series(1));
  const SweepResult parallel = run_scenario(small_series(2));
  const SweepResult again = run_scenario(small_series(1));
  EXPECT_EQ(format_csv(serial.table), format_csv(parallel.table));
  EXPECT_EQ(format_csv(serial.table), format_csv(again.table));
  EXPECT_EQ(serial.table.rows.size(), 3u);
}

TEST(Sweep, RateModeColumnFollowsSpec) {
  ScenarioConfig c = parse_config(json::parse(R"({
    "scenario": "bridge-anharmonicity",
    "spec": {"ho_truncation": 2, "bridge_rate_mode": "paper"},
    "axes": {"delta_omega": [300]},
    "protocol": {"block_length": 200, "average_window": 50}
  })"));
  const SweepResult r = run_scenario(c);
  ASSERT_EQ(r.table.rows.size(), 1u);
  EXPECT_EQ(r.table.text(0, "rate_mode"), "paper");
  const auto m = metadata_json(c, r);
  for (const char* key : {"scenario", "version", "created_utc", "rate_mode", "config", "tolerances", "model_choices",
                          "rows", "nonconverged", "warnings", "summary"})
    EXPECT_TRUE(m.contains(key)) << key;
  EXPECT_EQ(m["rate_mode"], "paper");
  EXPECT_EQ(m["config"]["spec"]["ho_truncation"], 2);
}

TEST(Outputs, WritesCsvMetadataAndPlots) {
  ScenarioConfig c = default_config("parallel-sweep");
  c.axes = {{"delta_omega_D1", {300}}, {"delta_omega_D2", {100, 200}}};
  c.plot = true;
  const SweepResult r = run_scenario(c);
  const auto dir = std::filesystem::temp_directory_path() / "heatrect-test-outputs";
  std::filesystem::remove_all(dir);
  const auto files = write_outputs(c, r, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "parallel-sweep.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "metadata.json"));
  bool svg = false;
  for (const auto& f : files) svg |= f.ends_with(".svg");
  EXPECT_TRUE(svg);
  std::ifstream in(dir / "metadata.json");
  const json meta = json::parse(in);
  EXPECT_EQ(meta["rows"], 2);
}

TEST(Plot, SvgSkipsNonFinitePoints) {
  const std::string svg = line_plot_svg({{"R", {1, 2, 3}, {1, std::nan(""), 3}}}, {"t", "x", "y", false, true});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}
