// nestor command line: solve, check-nested, oracle, reduce-1d, scenario-list,
// holder-probe. Flags are folded into a config document and validated against
// the same schema as config files; flags override the file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nestor/config.hpp"
#include "nestor/run.hpp"
#include "nestor/scenarios.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string config_file;
  std::optional<int> resolution;
  std::optional<std::string> quadrature;
  std::optional<std::uint64_t> seed;
  std::optional<int> y_nodes;
  std::optional<double> tol_mass;
  std::optional<double> epsilon_band;
  std::optional<std::string> estimator;
  bool require_nested = false;
  std::optional<std::string> out;
  std::optional<double> theta0;
  std::optional<int> m;
  std::optional<double> flatness;
  std::optional<double> inner_radius;
  std::optional<std::string> atoms;
  bool timings = false;
  bool no_map = false;
};

void add_common(CLI::App* sub, Flags& f, bool scenario_required) {
  auto* pos = sub->add_option("scenario", f.scenario, "built-in scenario name (see scenario-list)");
  auto* cfg = sub->add_option("--config", f.config_file, "JSON run config");
  if (scenario_required) pos->excludes(cfg);
  sub->add_option("--resolution", f.resolution, "quadrature points per axis (tensor grid) or samples (Monte Carlo)");
  sub->add_option("--quadrature", f.quadrature, "tensor-grid | monte-carlo");
  sub->add_option("--seed", f.seed, "seed for sampling and probes");
  sub->add_option("--y-nodes", f.y_nodes, "Chebyshev nodes in Y");
  sub->add_option("--tol-mass", f.tol_mass, "mass tolerance of the splitting bisection");
  sub->add_option("--epsilon-band", f.epsilon_band, "band half-width (0 = automatic)");
  sub->add_option("--estimator", f.estimator, "band | contour2d");
  sub->add_flag("--require-nested", f.require_nested, "exit 2 unless the verdict is nested");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--theta0", f.theta0, "pie-slice half angle");
  sub->add_option("--m", f.m, "source dimension");
  sub->add_option("--flatness", f.flatness, "flat-paraboloid exponent");
  sub->add_option("--inner-radius", f.inner_radius, "ball-circle inner radius");
  sub->add_flag("--timings", f.timings, "record wall-clock timings in summary.json");
  sub->add_flag("--no-map", f.no_map, "skip map.csv");
}

nlohmann::json document(const Flags& f, nestor::Command cmd) {
  nlohmann::json doc = nlohmann::json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw nestor::ConfigError("", "cannot open config file '" + f.config_file + "'");
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw nestor::ConfigError("", std::string("malformed JSON: ") + e.what());
    }
  }
  if (!doc.is_object()) return doc;
  if (!f.scenario.empty()) doc["scenario"] = {{"name", f.scenario}};
  if (doc.contains("scenario") && doc["scenario"].is_object()) {
    auto& s = doc["scenario"];
    if (f.theta0) s["theta0"] = *f.theta0;
    if (f.m) s["m"] = *f.m;
    if (f.flatness) s["flatness"] = *f.flatness;
    if (f.inner_radius) s["inner_radius"] = *f.inner_radius;
  }
  if (f.resolution) doc["quadrature"]["resolution"] = *f.resolution;
  if (f.quadrature) doc["quadrature"]["mode"] = *f.quadrature;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.y_nodes) doc["solver"]["y_nodes"] = *f.y_nodes;
  if (f.tol_mass) doc["solver"]["tol_mass"] = *f.tol_mass;
  if (f.epsilon_band) doc["solver"]["epsilon_band"] = *f.epsilon_band;
  if (f.estimator) doc["solver"]["estimator"] = *f.estimator;
  if (f.require_nested) doc["require_nested"] = true;
  if (f.out) doc["out_dir"] = *f.out;
  if (f.timings) doc["outputs"]["timings"] = true;
  if (f.no_map) doc["outputs"]["map"] = false;
  if (f.atoms) {
    static const std::regex shape(R"((\d+)x(\d+))");
    std::smatch mt;
    if (!std::regex_match(*f.atoms, mt, shape)) throw nestor::ConfigError("/oracle", "--atoms expects NxM");
    doc["oracle"]["source_atoms"] = std::stoi(mt[1]);
    doc["oracle"]["target_atoms"] = std::stoi(mt[2]);
  }
  if (cmd == nestor::Command::CheckNested) doc["outputs"]["nestedness"] = true;
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nestor: multi-to-one dimensional optimal transport by nested level sets"};
  app.require_subcommand(1);
  Flags flags;

  struct Entry {
    const char* name;
    nestor::Command cmd;
    const char* help;
  };
  const Entry entries[] = {
      {"solve", nestor::Command::Solve, "solve for k(y), F, u, v and write curve.csv, map.csv, summary.json"},
      {"check-nested", nestor::Command::CheckNested, "solve and run the nestedness criteria"},
      {"oracle", nestor::Command::Oracle, "compare with the exact discrete transport plan"},
      {"reduce-1d", nestor::Command::Reduce1d, "pseudo-index detection and 1D rearrangement"},
      {"holder-probe", nestor::Command::HolderProbe, "fit the endpoint Hoelder exponent of k"},
  };
  std::vector<std::pair<CLI::App*, nestor::Command>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, flags, true);
    if (e.cmd == nestor::Command::Oracle) sub->add_option("--atoms", flags.atoms, "source x target atoms, e.g. 400x40");
    subs.emplace_back(sub, e.cmd);
  }
  CLI::App* list = app.add_subcommand("scenario-list", "list built-in scenarios");
  bool list_json = false;
  list->add_flag("--json", list_json, "print as JSON");
  CLI::App* schema = app.add_subcommand("schema", "print the run-config JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nestor::kExitError;
  }

  if (list->parsed()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : nestor::list_scenarios()) {
      j.push_back({{"name", s.name}, {"summary", s.summary}, {"parameters", s.parameters}});
      if (!list_json) {
        std::string params;
        for (const auto& p : s.parameters) params += (params.empty() ? "" : ", ") + p;
        std::printf("%-20s %s%s\n", s.name.c_str(), s.summary.c_str(),
                    params.empty() ? "" : (" [" + params + "]").c_str());
      }
    }
    if (list_json) std::cout << j.dump(2) << "\n";
    return nestor::kExitOk;
  }
  if (schema->parsed()) {
    std::cout << nestor::run_config_schema_text() << "\n";
    return nestor::kExitOk;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    nestor::RunConfig cfg;
    try {
      cfg = nestor::RunConfig::from_json(document(flags, cmd));
    } catch (const nestor::Error& e) {
      std::cerr << "nestor: " << e.what() << "\n";
      return nestor::kExitError;
    }
    const int code = nestor::run(cfg, cmd, std::cerr);
    if (code != nestor::kExitError) {
      const std::string out = cfg.out_dir.empty() ? nestor::default_out_dir() : cfg.out_dir;
      std::cerr << "nestor: wrote " << out << "/summary.json\n";
    }
    return code;
  }
  return nestor::kExitError;
}
