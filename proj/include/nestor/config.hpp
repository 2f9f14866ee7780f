#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nestor/error.hpp"
#include "nestor/json_schema.hpp"
#include "nestor/nested_solver.hpp"
#include "nestor/nestedness.hpp"
#include "nestor/pseudo_index.hpp"
#include "nestor/quadrature.hpp"
#include "nestor/scenarios.hpp"

namespace nestor {

struct OutputRequests {
  bool curve = true;
  bool map = true;
  int map_samples = 500;
  bool nestedness = true;
  bool oracle = false;
  bool holder = false;
  bool reduce_1d = false;
  bool timings = false;
};

/// Everything a run needs. Either `scenario` or `model_spec` is set.
struct RunConfig {
  std::optional<std::string> scenario;
  ScenarioParams scenario_params;
  /// Inline model document (the "model" object of the schema).
  std::optional<nlohmann::json> model_spec;

  std::optional<QuadratureMode> quadrature_mode;
  std::optional<int> resolution;
  SolverSettings solver;
  NestednessOptions nestedness;
  DetectionSettings detection;
  int source_atoms = 400;
  int target_atoms = 40;
  std::pair<double, double> holder_window{0.01, 0.2};
  int reduce_resolution = 2049;
  OutputRequests outputs;
  std::uint64_t seed = 1;
  bool require_nested = false;
  std::string out_dir;

  /// Validates against the shipped schema, then reads the document. Throws
  /// ConfigError listing every violation.
  static RunConfig from_json(const nlohmann::json& doc);
  /// Full echo with every default filled in; used in summary.json.
  nlohmann::json to_json() const;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<SchemaViolation> violations);
  ConfigError(const std::string& path, const std::string& message);
  const std::vector<SchemaViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<SchemaViolation> violations_;
};

const JsonSchema& run_config_schema();
const char* run_config_schema_text();

/// NESTOR_OUT_DIR when set and non-empty, otherwise "nestor-out".
std::string default_out_dir();

/// Model described by an inline spec (domain, target, polynomial surplus and
/// optional polynomial densities).
std::shared_ptr<const Model> build_inline_model(const nlohmann::json& spec, const QuadratureSettings& quad);

}  // namespace nestor
