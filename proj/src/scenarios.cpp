#include "nestor/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nestor/error.hpp"

namespace nestor {

namespace {

QuadratureSettings quadrature_for(const ScenarioParams& p, int m) {
  QuadratureSettings q = QuadratureSettings::defaults_for(m);
  if (p.mode) q.mode = *p.mode;
  if (p.resolution) q.resolution = *p.resolution;
  q.seed = p.seed;
  return q;
}

const auto kUniformF = [](PointRef) { return 1.0; };
const auto kUniformG = [](double) { return 1.0; };

double angle(PointRef x) { return std::atan2(x[1], x[0]); }

Scenario paraboloid(const std::string& name, const ScenarioParams& p, double flatness) {
  if (p.m < 2 || p.m > 3) throw Error(ErrorKind::InvalidArgument, "paraboloid scenarios take m in {2, 3}");
  if (!(flatness >= 1.0)) throw Error(ErrorKind::InvalidArgument, "flatness must be at least 1");
  Scenario s;
  s.name = name;
  s.params = p;
  s.model = std::make_shared<const Model>(make_paraboloid(p.m, flatness), TargetInterval{0.0, 1.0},
                                          std::make_shared<SegmentSurplus>(p.m), kUniformF, kUniformG,
                                          quadrature_for(p, p.m));
  // Mass below x_1 = t is t^q with q = 1 + (m - 1) / (2 kappa), so F = x_1^q.
  const double q = 1.0 + (p.m - 1) / (2.0 * flatness);
  s.analytic_map = [q](PointRef x) { return std::pow(std::clamp(x[0], 0.0, 1.0), q); };
  s.analytic_k = [q](double y) { return std::pow(std::max(y, 0.0), 1.0 / q); };
  s.analytic_v = [q](double y) { return std::pow(std::max(y, 0.0), 1.0 + 1.0 / q) / (1.0 + 1.0 / q); };
  s.analytic_u = [q](PointRef x) { return std::pow(std::clamp(x[0], 0.0, 1.0), q + 1.0) / (q + 1.0); };
  s.expected_verdict = Verdict::Nested;
  s.endpoint_exponent = 1.0 / q;
  return s;
}

Scenario ball_circle(const ScenarioParams& p) {
  if (!(p.inner_radius >= 0.0 && p.inner_radius < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "inner radius must lie in [0, 1)");
  }
  Scenario s;
  s.name = "ball-circle";
  s.params = p;
  s.params.m = 2;
  s.model = std::make_shared<const Model>(make_shell(2, p.inner_radius, 1.0),
                                          TargetInterval{-std::numbers::pi, std::numbers::pi},
                                          std::make_shared<ArcSurplus>(), kUniformF, kUniformG, quadrature_for(p, 2));
  s.analytic_map = angle;
  s.analytic_u = [](PointRef x) { return x.norm(); };
  s.analytic_v = [](double) { return 0.0; };
  s.expected_verdict = Verdict::NonNested;
  return s;
}

Scenario pie_slice(const ScenarioParams& p) {
  if (!(p.theta0 > 0.0 && p.theta0 < std::numbers::pi)) {
    throw Error(ErrorKind::InvalidArgument, "theta0 must lie in (0, pi)");
  }
  Scenario s;
  s.name = "pie-slice";
  s.params = p;
  s.params.m = 2;
  s.model = std::make_shared<const Model>(make_pie(p.theta0), TargetInterval{-p.theta0, p.theta0},
                                          std::make_shared<ArcSurplus>(), kUniformF, kUniformG, quadrature_for(p, 2));
  s.analytic_map = angle;
  const bool nested = p.theta0 <= 0.5 * std::numbers::pi;
  s.expected_verdict = nested ? Verdict::Nested : Verdict::NonNested;
  if (nested) {
    s.analytic_k = [](double) { return 0.0; };
    s.analytic_v = [](double) { return 0.0; };
    s.analytic_u = [](PointRef x) { return x.norm(); };
  }
  return s;
}

Scenario interval(const std::string& name, const ScenarioParams& p, bool linear_target) {
  Scenario s;
  s.name = name;
  s.params = p;
  s.params.m = 1;
  Model::TargetDensity g = kUniformG;
  if (linear_target) g = [](double y) { return 2.0 * y; };
  s.model = std::make_shared<const Model>(make_interval(0.0, 1.0), TargetInterval{0.0, 1.0},
                                          std::make_shared<SegmentSurplus>(1), kUniformF, g, quadrature_for(p, 1));
  if (linear_target) {
    s.analytic_map = [](PointRef x) { return std::sqrt(std::clamp(x[0], 0.0, 1.0)); };
    s.analytic_k = [](double y) { return y * y; };
    s.analytic_v = [](double y) { return y * y * y / 3.0; };
    s.analytic_u = [](PointRef x) { return 2.0 / 3.0 * std::pow(std::clamp(x[0], 0.0, 1.0), 1.5); };
    s.endpoint_exponent = 2.0;
  } else {
    s.analytic_map = [](PointRef x) { return std::clamp(x[0], 0.0, 1.0); };
    s.analytic_k = [](double y) { return y; };
    s.analytic_v = [](double y) { return 0.5 * y * y; };
    s.analytic_u = [](PointRef x) { return 0.5 * x[0] * x[0]; };
    s.endpoint_exponent = 1.0;
  }
  s.expected_verdict = Verdict::Nested;
  return s;
}

}  // namespace

nlohmann::json Scenario::describe() const {
  nlohmann::json j;
  j["name"] = name;
  j["m"] = params.m;
  if (name == "pie-slice") j["theta0"] = params.theta0;
  if (name == "flat-paraboloid") j["flatness"] = params.flatness;
  if (name == "ball-circle") j["inner_radius"] = params.inner_radius;
  j["expected_verdict"] = to_string(expected_verdict);
  j["analytic"] = {{"map", static_cast<bool>(analytic_map)},
                   {"u", static_cast<bool>(analytic_u)},
                   {"v", static_cast<bool>(analytic_v)},
                   {"k", static_cast<bool>(analytic_k)}};
  return j;
}

std::vector<ScenarioInfo> list_scenarios() {
  return {
      {"paraboloid-segment", "solid paraboloid onto a segment, s = y x_1, uniform densities", {"m"}},
      {"flat-paraboloid", "generalised paraboloid (1/2)|x'|^(2 flatness) < x_1 onto a segment", {"m", "flatness"}},
      {"ball-circle", "annulus onto the circle by angle, s = x_1 cos t + x_2 sin t", {"inner_radius"}},
      {"pie-slice", "sector |angle| < theta0 onto the arc of the same angles", {"theta0"}},
      {"uniform-1d", "unit interval onto itself, s = x y", {}},
      {"interval-linear", "uniform unit interval onto density 2y, s = x y", {}},
  };
}

Scenario build_scenario(const std::string& name, const ScenarioParams& params) {
  if (name == "paraboloid-segment") return paraboloid(name, params, 1.0);
  if (name == "flat-paraboloid") return paraboloid(name, params, params.flatness);
  if (name == "ball-circle") return ball_circle(params);
  if (name == "pie-slice") return pie_slice(params);
  if (name == "uniform-1d") return interval(name, params, false);
  if (name == "interval-linear") return interval(name, params, true);
  throw Error(ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
}

double analytic_pushforward_distance(const Scenario& scenario, int resolution) {
  if (!scenario.analytic_map) return std::numeric_limits<double>::infinity();
  return pushforward_distance(scenario.m(), scenario.analytic_map, resolution);
}

double analytic_duality_gap(const Scenario& scenario) {
  if (!scenario.analytic_map || !scenario.analytic_u || !scenario.analytic_v) return 0.0;
  const Model& model = scenario.m();
  const auto& quad = model.quadrature();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < quad.size(); ++i) {
    const auto x = quad.point(i);
    const double y = scenario.analytic_map(x);
    worst = std::max(worst, std::abs(scenario.analytic_u(x) + scenario.analytic_v(y) - model.surplus().value(x, y)));
  }
  return worst;
}

HolderFit holder_probe(const SplitCurve& curve, std::pair<double, double> window) {
  const double w = curve.target.width();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double dy = curve.y[i] - curve.target.lo;
    if (dy < window.first * w || dy > window.second * w) continue;
    const double dk = curve.k_plus[i] - curve.k_lo;
    if (!(dk > 0.0)) continue;
    const double a = std::log(dy);
    const double b = std::log(dk);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++n;
  }
  if (n < 5) throw Error(ErrorKind::InsufficientRange, "fewer than five nodes inside the fitting window");
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw Error(ErrorKind::InsufficientRange, "fitting window spans a single offset");
  return {(n * sxy - sx * sy) / denom, n};
}

ThresholdBracket bracket_pie_threshold(double lo, double hi, double width, const ScenarioParams& base,
                                       const SolverSettings& settings, const NestednessOptions& options) {
  ThresholdBracket out;
  const auto nested_at = [&](double theta0) {
    ScenarioParams p = base;
    p.theta0 = theta0;
    const Scenario s = build_scenario("pie-slice", p);
    const MatchSolution sol = MatchSolution::solve(s.m(), settings);
    const Verdict v = assess_nestedness(sol, options).verdict;
    out.evaluations.emplace_back(theta0, v);
    return v == Verdict::Nested;
  };
  if (!nested_at(lo)) throw Error(ErrorKind::InvalidArgument, "lower end of the theta0 bracket is not nested");
  if (nested_at(hi)) throw Error(ErrorKind::InvalidArgument, "upper end of the theta0 bracket is nested");
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (nested_at(mid)) lo = mid; else hi = mid;
  }
  out.nested_at = lo;
  out.non_nested_at = hi;
  return out;
}

}  // namespace nestor
