#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nestor/config.hpp"
#include "nestor/json_schema.hpp"
#include "nestor/run.hpp"

using namespace nestor;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nestor_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Shell {
  int code;
  std::string output;
};

Shell shell(const std::string& args) {
  const std::string cmd = std::string(NESTOR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

nlohmann::json small_run(const std::string& scenario, const fs::path& out) {
  return {{"scenario", {{"name", scenario}}},
          {"quadrature", {{"resolution", 96}}},
          {"solver", {{"y_nodes", 65}}},
          {"outputs", {{"map_samples", 50}}},
          {"out_dir", out.string()}};
}

}  // namespace

TEST(JsonSchema, ReportsPointerPaths) {
  const JsonSchema schema(nlohmann::json::parse(R"({
    "type": "object", "additionalProperties": false, "required": ["a"],
    "properties": {
      "a": {"type": "array", "items": {"type": "integer", "minimum": 0}},
      "b/c": {"type": "string", "enum": ["x", "y"]}
    }})"));
  EXPECT_TRUE(schema.validate(nlohmann::json::parse(R"({"a": [1, 2]})")).empty());
  const auto v = schema.validate(nlohmann::json::parse(R"({"a": [1, -2, "z"], "b/c": "q", "d": 1})"));
  std::vector<std::string> paths;
  for (const auto& e : v) paths.push_back(e.path);
  EXPECT_NE(std::find(paths.begin(), paths.end(), "/a/1"), paths.end());
  EXPECT_NE(std::find(paths.begin(), paths.end(), "/a/2"), paths.end());
  EXPECT_NE(std::find(paths.begin(), paths.end(), "/b~1c"), paths.end());
  EXPECT_NE(std::find(paths.begin(), paths.end(), "/d"), paths.end());
  const auto missing = schema.validate(nlohmann::json::object());
  ASSERT_EQ(missing.size(), 1u);
  EXPECT_EQ(missing[0].path, "");
}

TEST(JsonSchema, ShippedSchemaParses) {
  const auto doc = nlohmann::json::parse(run_config_schema_text());
  EXPECT_EQ(doc["type"], "object");
  EXPECT_TRUE(run_config_schema().validate(nlohmann::json{{"scenario", {{"name", "uniform-1d"}}}}).empty());
}

TEST(RunConfig, DefaultsAndEcho) {
  const RunConfig c = RunConfig::from_json({{"scenario", {{"name", "pie-slice"}, {"theta0", 1.2}}}, {"seed", 9}});
  EXPECT_EQ(*c.scenario, "pie-slice");
  EXPECT_DOUBLE_EQ(c.scenario_params.theta0, 1.2);
  EXPECT_EQ(c.solver.y_nodes, 257);
  EXPECT_DOUBLE_EQ(c.solver.tol_mass, 1e-6);
  EXPECT_EQ(c.nestedness.seed, 9u);
  const auto echo = c.to_json();
  for (const char* key : {"tol_mass", "epsilon_band", "map_tol", "plateau_gap", "tangential_fraction", "zero_speed",
                          "splitting_scan", "splitting_noise", "y_nodes", "estimator"}) {
    EXPECT_TRUE(echo["solver"].contains(key)) << key;
  }
  EXPECT_TRUE(echo["detection"].contains("match_tol"));
  EXPECT_TRUE(run_config_schema().validate(echo).empty());
}

TEST(RunConfig, SchemaViolationsCarryPaths) {
  try {
    RunConfig::from_json({{"scenario", {{"name", "pie-slice"}, {"theta0", 7}}}, {"solver", {{"tol_mass", -1}}}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.violations().size(), 2u);
    EXPECT_EQ(e.violations()[0].path, "/scenario/theta0");
    EXPECT_EQ(e.violations()[1].path, "/solver/tol_mass");
  }
}

TEST(RunConfig, ScenarioOrModelRequired) {
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::object()), ConfigError);
}

TEST(RunConfig, OutDirFromEnvironment) {
  setenv("NESTOR_OUT_DIR", "/tmp/somewhere", 1);
  EXPECT_EQ(default_out_dir(), "/tmp/somewhere");
  unsetenv("NESTOR_OUT_DIR");
  EXPECT_EQ(default_out_dir(), "nestor-out");
}

TEST(Run, SolveWritesArtifacts) {
  const fs::path out = scratch("solve");
  const RunResult r = execute(RunConfig::from_json(small_run("paraboloid-segment", out)), Command::Solve);
  EXPECT_EQ(r.exit_code, kExitOk);
  for (const char* f : {"curve.csv", "map.csv", "nestedness.json", "summary.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  std::ifstream curve(out / "curve.csv");
  std::string header;
  std::getline(curve, header);
  EXPECT_EQ(header, "y,k,kprime,v,area,residual,tangential");
  int rows = 0;
  for (std::string line; std::getline(curve, line);) ++rows;
  EXPECT_EQ(rows, 65);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["nestedness"]["verdict"], "nested");
  EXPECT_FALSE(summary.contains("timings"));
  EXPECT_DOUBLE_EQ(summary["config"]["solver"]["tol_mass"].get<double>(), 1e-6);
}

TEST(Run, ReproducibleArtifacts) {
  const fs::path out = scratch("repro");
  const auto cfg = RunConfig::from_json(small_run("uniform-1d", out));
  execute(cfg, Command::Solve);
  const std::string a = slurp(out / "curve.csv") + slurp(out / "map.csv") + slurp(out / "summary.json");
  execute(cfg, Command::Solve);
  const std::string b = slurp(out / "curve.csv") + slurp(out / "map.csv") + slurp(out / "summary.json");
  EXPECT_EQ(a, b);
}

TEST(Run, SeventeenDigitFormatting) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Run, RequireNestedExitsTwoOnBallCircle) {
  const fs::path out = scratch("ball");
  auto doc = small_run("ball-circle", out);
  doc["require_nested"] = true;
  std::ostringstream err;
  EXPECT_EQ(run(RunConfig::from_json(doc), Command::CheckNested, err), kExitNonNested);
  const auto report = nlohmann::json::parse(slurp(out / "nestedness.json"));
  EXPECT_EQ(report["verdict"], "non-nested");
  EXPECT_FALSE(report["unique_splitting"]["witnesses"].empty());
}

TEST(Run, InlinePolynomialModel) {
  const fs::path out = scratch("inline");
  nlohmann::json doc = {
      {"model",
       {{"domain", {{"kind", "box"}, {"lo", {0.0, 0.0}}, {"hi", {1.0, 1.0}}}},
        {"target", {0.0, 1.0}},
        {"surplus", {{"terms", {{{"coef", 1.0}, {"x_pow", {1, 0}}, {"y_pow", 1}}}}}}}},
      {"quadrature", {{"resolution", 64}}},
      {"solver", {{"y_nodes", 33}}},
      {"outputs", {{"map_samples", 20}, {"nestedness", false}}},
      {"out_dir", out.string()}};
  const RunResult r = execute(RunConfig::from_json(doc), Command::Solve);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_LE(r.summary["solve"]["pushforward_distance"].get<double>(), 1e-2);
}

TEST(Run, NumericalErrorsExitOne) {
  const fs::path out = scratch("reduce_ball");
  std::ostringstream err;
  EXPECT_EQ(run(RunConfig::from_json(small_run("ball-circle", out)), Command::Reduce1d, err), kExitError);
  EXPECT_NE(err.str().find("pseudo-index"), std::string::npos);
}

TEST(Cli, ScenarioList) {
  const Shell s = shell("scenario-list");
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.output.find("paraboloid-segment"), std::string::npos);
  EXPECT_NE(s.output.find("pie-slice"), std::string::npos);
}

TEST(Cli, MalformedConfigReportsPath) {
  const fs::path dir = scratch("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"scenario": {"name": "pie-slice"}, "solver": {"y_nodes": "many"}})";
  const Shell s = shell("solve --config " + (dir / "bad.json").string() + " --out " + dir.string());
  EXPECT_EQ(s.code, 1);
  EXPECT_NE(s.output.find("/solver/y_nodes"), std::string::npos);
}

TEST(Cli, CheckNestedPieBelowRightAngle) {
  const fs::path out = scratch("pie");
  const Shell s = shell("check-nested pie-slice --theta0 1.2 --resolution 128 --require-nested --no-map --out " +
                        out.string());
  EXPECT_EQ(s.code, 0) << s.output;
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["nestedness"]["verdict"], "nested");
}

TEST(Cli, OracleWritesSurplusGap) {
  const fs::path out = scratch("oracle");
  const Shell s = shell("oracle paraboloid-segment --atoms 100x10 --resolution 96 --y-nodes 65 --no-map --out " +
                        out.string());
  EXPECT_EQ(s.code, 0) << s.output;
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["oracle"]["source_atoms"], 100);
  EXPECT_LE(summary["oracle"]["surplus_gap"].get<double>(), 1e-2);
}

TEST(Cli, Reduce1dMatchesSolve) {
  const fs::path out = scratch("reduce");
  const Shell s = shell("reduce-1d paraboloid-segment --resolution 128 --no-map --out " + out.string());
  EXPECT_EQ(s.code, 0) << s.output;
  EXPECT_TRUE(fs::exists(out / "reduce_1d.csv"));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_LE(summary["reduce_1d"]["max_difference_to_solve"].get<double>(), 1e-2);
}

TEST(Cli, HolderProbe) {
  const fs::path out = scratch("holder");
  const Shell s = shell("holder-probe paraboloid-segment --no-map --out " + out.string());
  EXPECT_EQ(s.code, 0) << s.output;
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_NEAR(summary["holder"]["exponent"].get<double>(), 2.0 / 3.0, 0.05);
}

TEST(Cli, UnknownFlagIsAnError) { EXPECT_EQ(shell("solve uniform-1d --bogus").code, 1); }
