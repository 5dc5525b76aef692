#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rough/cli/cli.hpp"

using namespace rough;
using namespace rough::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rough_cli_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

Json integrate_config() {
  return Json::parse(R"({"command": "integrate",
    "params": {"field": {"kind": "linear", "params": {"scalar": true}}, "path": "builtin:identity"},
    "seed": 3})");
}

std::size_t data_rows(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++n;
  return n;
}

}  // namespace

TEST(Config, RoundTrip) {
  Json j = integrate_config();
  j["out"] = "somewhere";
  j["tol"] = 1e-7;
  j["threads"] = 2;
  const auto c = ExperimentConfig::from_json(j);
  EXPECT_EQ(c.to_json(), j);
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json().dump(), j.dump());
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  Json top = integrate_config();
  top["colour"] = "red";
  EXPECT_THROW(ExperimentConfig::from_json(top), UsageError);
  Json param = integrate_config();
  param["params"]["speed"] = 1;
  EXPECT_THROW(ExperimentConfig::from_json(param), UsageError);
  Json type = integrate_config();
  type["params"]["levels"] = "many";
  EXPECT_THROW(ExperimentConfig::from_json(type), UsageError);
  Json missing = integrate_config();
  missing["params"].erase("path");
  EXPECT_THROW(ExperimentConfig::from_json(missing), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json(Json::parse(R"({"command": "dance"})")), UsageError);
}

TEST(Run, EmptyConfigIsUsageError) {
  const auto env = run(ExperimentConfig{});
  EXPECT_EQ(env.exit_code, 2);
  EXPECT_EQ(env.body["status"], "usage_error");
  EXPECT_EQ(env.body["error"]["kind"], "usage");
  EXPECT_THROW(ExperimentConfig::from_json(Json::object()), UsageError);
}

TEST(Run, IntegrateLinearFieldGivesOneHalf) {
  const auto out = scratch("integrate");
  auto c = ExperimentConfig::from_json(integrate_config());
  c.out = out.string();
  const auto env = run(c);
  EXPECT_EQ(env.exit_code, 0);
  EXPECT_EQ(env.body["status"], "pass");
  EXPECT_NEAR(env.body["outputs"]["value"].get<double>(), 0.5, 1e-6);
  EXPECT_TRUE(std::filesystem::exists(out / "envelope.json"));
  EXPECT_EQ(data_rows(out / "convergence.csv"), env.body["outputs"]["trace"].size());
}

TEST(Run, ModuleErrorIsStructured) {
  // x0 far outside the field box
  const auto c = ExperimentConfig::from_json(Json::parse(R"({"command": "flow",
    "params": {"field": {"kind": "analytic:drift", "domain": {"x": [-1, 1]}}, "x0": [0.5], "T": 1}})"));
  const auto env = run(c);
  EXPECT_EQ(env.exit_code, 1);
  EXPECT_EQ(env.body["status"], "error");
  EXPECT_EQ(env.body["error"]["kind"], "domain");
}

TEST(Run, SameConfigSameCsv) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  Json j = Json::parse(R"({"command": "sheet", "params": {"hurst": [0.5, 0.5], "draws": 600,
    "check": "concentration"}, "seed": 9})");
  for (const auto& dir : {a, b}) {
    j["out"] = dir.string();
    run(ExperimentConfig::from_json(j));
  }
  std::string why;
  EXPECT_TRUE(same_csv_outputs(a.string(), b.string(), &why)) << why;
}

TEST(PlotData, RowCounts) {
  // 8 sewing levels give 8 rows
  Json j = integrate_config();
  j["params"]["levels"] = 7;
  const auto conv = run(ExperimentConfig::from_json(j));
  const auto dir = scratch("plots");
  std::filesystem::create_directories(dir);
  EXPECT_EQ(emit_plot_data(conv.body, PlotKind::convergence, (dir / "c.csv").string()), 8u);
  EXPECT_EQ(data_rows(dir / "c.csv"), 8u);
  EXPECT_THROW(emit_plot_data(conv.body, PlotKind::raster, (dir / "r.csv").string()), ArgumentError);

  const auto raster = run(ExperimentConfig::from_json(Json::parse(R"({"command": "transport",
    "params": {"field": {"kind": "analytic:drift", "params": {"dim": 2, "b": [0.5, -0.25]}},
               "grid": {"lo": -1, "hi": 1, "n": 64}, "steps": 16}})")));
  ASSERT_EQ(raster.exit_code, 0) << raster.body.dump();
  EXPECT_EQ(emit_plot_data(raster.body, PlotKind::raster, (dir / "r.csv").string()), 4096u);

  const auto tail = run(ExperimentConfig::from_json(Json::parse(R"({"command": "sheet",
    "params": {"hurst": [0.5, 0.5], "draws": 600, "check": "concentration"}, "seed": 4})")));
  EXPECT_EQ(emit_plot_data(tail.body, PlotKind::tail, (dir / "t.csv").string()), 3u);
  // Where the verdicts pass, frequency stays below the bound column.
  for (std::size_t i = 0; i < 3; ++i) {
    if (!tail.body["verdicts"][i]["pass"].get<bool>()) continue;
    const auto& row = tail.body["plots"]["tail"][i];
    EXPECT_LE(row[1].get<double>(), row[2].get<double>());
  }
  EXPECT_THROW(plot_kind_from_string("scatter"), ArgumentError);
  EXPECT_EQ(plot_kind_from_string("tail"), PlotKind::tail);
}

TEST(MainEntry, FlagsBuildTheConfig) {
  const auto dir = scratch("main");
  const std::string out = dir.string();
  std::vector<std::string> args{"rough-young", "integrate", "--field", R"({"kind":"linear","params":{"scalar":true}})",
                                "--path", "builtin:identity", "--levels", "6", "--out", out};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  testing::internal::CaptureStdout();
  const int code = main_entry(static_cast<int>(argv.size()), argv.data());
  const Json env = Json::parse(testing::internal::GetCapturedStdout());
  EXPECT_EQ(env["config"]["params"]["levels"], 6);
  EXPECT_EQ(env["outputs"]["trace"].size(), 7u);
  EXPECT_EQ(code, env["status"] == "pass" ? 0 : 1);
  EXPECT_EQ(data_rows(dir / "convergence.csv"), 7u);

  std::vector<std::string> bad{"rough-young", "integrate", "--field", "{}", "--path", "builtin:identity"};
  std::vector<char*> badv;
  for (auto& a : bad) badv.push_back(a.data());
  testing::internal::CaptureStdout();
  EXPECT_EQ(main_entry(static_cast<int>(badv.size()), badv.data()), 2);
  testing::internal::GetCapturedStdout();
}
