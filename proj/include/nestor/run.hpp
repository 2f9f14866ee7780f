#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nestor/config.hpp"
#include "nestor/nestedness.hpp"

namespace nestor {

enum class Command { Solve, CheckNested, Oracle, Reduce1d, HolderProbe };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNonNested = 2;

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
  std::optional<Verdict> verdict;
  /// Paths of the files written, in write order.
  std::vector<std::string> artifacts;
};

/// Runs one command and writes its artifacts into the output directory
/// (config value, else NESTOR_OUT_DIR, else ./nestor-out). Numerical and
/// configuration failures propagate as exceptions.
RunResult execute(const RunConfig& config, Command command);

/// `execute` with errors reported on `err` and mapped to exit code 1.
int run(const RunConfig& config, Command command, std::ostream& err);

nlohmann::json to_json(const NestednessReport& report);

/// Shortest round-trip form used in every CSV: printf "%.17g".
std::string format_double(double v);

}  // namespace nestor
