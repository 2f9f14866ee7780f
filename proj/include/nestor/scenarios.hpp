#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nestor/model.hpp"
#include "nestor/nestedness.hpp"

namespace nestor {

struct ScenarioParams {
  int m = 2;
  double theta0 = 0.7853981633974483;  // pi / 4
  /// Exponent kappa of the generalised paraboloid (1/2)|x'|^(2 kappa) < x_1.
  double flatness = 1.0;
  double inner_radius = 0.05;
  /// Overrides of the default quadrature for the dimension.
  std::optional<int> resolution;
  std::optional<QuadratureMode> mode;
  std::uint64_t seed = 1;
};

struct Scenario {
  std::string name;
  ScenarioParams params;
  std::shared_ptr<const Model> model;
  std::function<double(PointRef)> analytic_map;
  std::function<double(PointRef)> analytic_u;
  std::function<double(double)> analytic_v;
  std::function<double(double)> analytic_k;
  Verdict expected_verdict = Verdict::Nested;
  /// Hoelder exponent of k at y_lo when known in closed form.
  std::optional<double> endpoint_exponent;

  const Model& m() const { return *model; }
  nlohmann::json describe() const;
};

struct ScenarioInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> parameters;
};

std::vector<ScenarioInfo> list_scenarios();

/// Builds a named scenario. Throws UnknownScenario for an unknown name and
/// InvalidArgument for parameters outside their ranges (m in {2, 3} or 1 for
/// the interval cases, theta0 in (0, pi), flatness >= 1, inner radius in [0, 1)).
Scenario build_scenario(const std::string& name, const ScenarioParams& params = {});

/// Kolmogorov-Smirnov distance of the analytic map's push-forward to the
/// target; the registration self-check. Infinity without an analytic map.
double analytic_pushforward_distance(const Scenario& scenario, int resolution = 513);

/// Largest |u(x) + v(F(x)) - s(x, F(x))| of the analytic fields over the
/// quadrature points (0 when any field is missing).
double analytic_duality_gap(const Scenario& scenario);

struct HolderFit {
  double exponent = 0.0;
  int points = 0;
};

/// Log-log least squares of k(y) - k(y_lo) against y - y_lo over the curve
/// nodes whose offset lies in window * |Y|. Throws InsufficientRange with
/// fewer than five usable nodes.
HolderFit holder_probe(const SplitCurve& curve, std::pair<double, double> window = {0.01, 0.2});

struct ThresholdBracket {
  double nested_at = 0.0;
  double non_nested_at = 0.0;
  std::vector<std::pair<double, Verdict>> evaluations;
};

/// Bisection over theta0 of the pie slice for the nested / non-nested flip,
/// stopping at `width`. Inconclusive verdicts count as non-nested.
ThresholdBracket bracket_pie_threshold(double lo, double hi, double width, const ScenarioParams& base = {},
                                       const SolverSettings& settings = {}, const NestednessOptions& options = {});

}  // namespace nestor
