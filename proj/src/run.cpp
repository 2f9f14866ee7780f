#include "nestor/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "nestor/discrete_oracle.hpp"
#include "nestor/pseudo_index.hpp"
#include "nestor/scenarios.hpp"

namespace nestor {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// NaN and infinities become null so the JSON stays valid and comparable.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json point(PointRef x) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

struct Context {
  Context(const RunConfig& c, fs::path dir) : cfg(c), out(std::move(dir)) {}

  const RunConfig& cfg;
  fs::path out;
  RunResult result;
  nlohmann::json timings = nlohmann::json::object();
  std::optional<Scenario> scenario;
  std::shared_ptr<const Model> model;

  void write_text(const std::string& name, const std::string& body) {
    const fs::path p = out / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + p.string());
    f << body;
    result.artifacts.push_back(p.string());
  }
  void write_json(const std::string& name, const nlohmann::json& j) { write_text(name, j.dump(2) + "\n"); }
};

std::string csv_row(std::initializer_list<double> values) {
  std::string s;
  bool first = true;
  for (const double v : values) {
    if (!first) s += ',';
    s += format_double(v);
    first = false;
  }
  return s + '\n';
}

void build(Context& c) {
  const auto t0 = Clock::now();
  const RunConfig& cfg = c.cfg;
  if (cfg.scenario) {
    ScenarioParams p = cfg.scenario_params;
    if (cfg.resolution) p.resolution = cfg.resolution;
    if (cfg.quadrature_mode) p.mode = cfg.quadrature_mode;
    p.seed = cfg.seed;
    c.scenario = build_scenario(*cfg.scenario, p);
    c.model = c.scenario->model;
  } else {
    const int m = c.cfg.model_spec->at("domain").contains("lo")
                      ? static_cast<int>(c.cfg.model_spec->at("domain").at("lo").size())
                      : c.cfg.model_spec->at("domain").value("m", 2);
    QuadratureSettings q = QuadratureSettings::defaults_for(m);
    if (cfg.resolution) q.resolution = *cfg.resolution;
    if (cfg.quadrature_mode) q.mode = *cfg.quadrature_mode;
    q.seed = cfg.seed;
    c.model = build_inline_model(*cfg.model_spec, q);
  }
  const Model& m = *c.model;
  c.result.summary["model"] = {{"dim", m.dim()},
                               {"domain", m.domain().name},
                               {"surplus", m.surplus().name()},
                               {"target", {m.target().lo, m.target().hi}},
                               {"quadrature_points", m.quadrature().size()},
                               {"surplus_scale", m.surplus_scale()}};
  if (c.scenario) c.result.summary["scenario"] = c.scenario->describe();
  c.timings["build"] = seconds_since(t0);
}

std::vector<Eigen::Index> sample_ids(const Model& model, int count) {
  const Eigen::Index n = model.quadrature().size();
  const Eigen::Index k = std::min<Eigen::Index>(count, n);
  std::vector<Eigen::Index> ids;
  for (Eigen::Index q = 0; q < k; ++q) ids.push_back(static_cast<Eigen::Index>((2 * q + 1) * n / (2 * k)));
  return ids;
}

MatchSolution solve(Context& c) {
  const auto t0 = Clock::now();
  MatchSolution sol = MatchSolution::solve(*c.model, c.cfg.solver);
  c.timings["solve"] = seconds_since(t0);
  const SplitCurve& curve = sol.curve();
  const Model& model = *c.model;
  const TargetInterval& tgt = model.target();

  std::string csv = "y,k,kprime,v,area,residual,tangential\n";
  double worst_residual = 0.0;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double y = curve.y[i];
    double residual = std::numeric_limits<double>::quiet_NaN();
    try {
      residual = balance_residual(model, curve, y, c.cfg.solver.epsilon);
    } catch (const Error&) {
    }
    const double t = (y - tgt.lo) / tgt.width();
    if (!curve.tangential[i] && t >= 0.05 && t <= 0.95) {
      if (std::isfinite(residual)) worst_residual = std::max(worst_residual, std::abs(residual));
      worst_gap = std::max(worst_gap, std::abs(curve.kprime[i] - curve.kprime_fd[i]));
    }
    csv += csv_row({y, curve.k_plus[i], curve.kprime[i], sol.v(y), curve.area[i], residual,
                    static_cast<double>(curve.tangential[i])});
  }
  if (c.cfg.outputs.curve) c.write_text("curve.csv", csv);

  const auto count = [&](const std::vector<unsigned char>& v) { return std::count(v.begin(), v.end(), 1); };
  nlohmann::json s = {{"nodes", curve.size()},
                      {"tangential_nodes", count(curve.tangential)},
                      {"plateau_nodes", count(curve.plateau)},
                      {"k_lo", curve.k_lo},
                      {"k_hi", curve.k_hi},
                      {"max_balance_residual", worst_residual},
                      {"max_kprime_fd_gap", worst_gap}};
  const auto tp = Clock::now();
  s["pushforward_distance"] = pushforward_distance(model, curve);
  c.timings["pushforward"] = seconds_since(tp);

  if (c.cfg.outputs.map) {
    const auto tm = Clock::now();
    std::string header;
    for (int j = 0; j < model.dim(); ++j) header += "x" + std::to_string(j + 1) + ",";
    std::string body = header + "F,u,DF_norm\n";
    for (const Eigen::Index i : sample_ids(model, c.cfg.outputs.map_samples)) {
      const auto x = model.quadrature().point(i);
      double dfn = std::numeric_limits<double>::quiet_NaN();
      try {
        dfn = sol.map_gradient(x).norm();
      } catch (const Error&) {
      }
      for (int j = 0; j < model.dim(); ++j) body += format_double(x[j]) + ",";
      body += csv_row({sol.map(x), sol.u(x), dfn});
    }
    c.write_text("map.csv", body);
    c.timings["map"] = seconds_since(tm);
  }

  if (c.scenario) {
    const Scenario& sc = *c.scenario;
    nlohmann::json a = nlohmann::json::object();
    if (sc.analytic_k) {
      double e = 0.0;
      for (std::size_t i = 0; i < curve.size(); ++i) {
        const double t = (curve.y[i] - tgt.lo) / tgt.width();
        if (t >= 0.02 && t <= 0.98) e = std::max(e, std::abs(curve.k_plus[i] - sc.analytic_k(curve.y[i])));
      }
      a["k_error"] = e;
    }
    if (sc.analytic_v) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int q = 0; q <= 200; ++q) {
        const double y = tgt.lo + tgt.width() * q / 200.0;
        const double d = sol.v(y) - sc.analytic_v(y);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      a["v_error_after_shift"] = 0.5 * (hi - lo);
    }
    if (sc.analytic_map && sc.expected_verdict == Verdict::Nested) {
      double e = 0.0;
      for (const Eigen::Index i : sample_ids(model, c.cfg.outputs.map_samples)) {
        const auto x = model.quadrature().point(i);
        e = std::max(e, std::abs(sol.map(x) - sc.analytic_map(x)));
      }
      a["map_error"] = e;
    }
    s["analytic"] = a;
  }
  c.result.summary["solve"] = s;
  return sol;
}

void nestedness(Context& c, const MatchSolution& sol) {
  const auto t0 = Clock::now();
  const NestednessReport r = assess_nestedness(sol, c.cfg.nestedness);
  c.timings["nestedness"] = seconds_since(t0);
  c.write_json("nestedness.json", to_json(r));
  c.result.verdict = r.verdict;
  c.result.summary["nestedness"] = {{"verdict", to_string(r.verdict)},
                                    {"monotone", r.monotone.pass},
                                    {"dynamic", r.dynamic.pass},
                                    {"unique_splitting", r.unique_splitting.pass},
                                    {"splitting_witnesses", r.unique_splitting.witnesses.size()},
                                    {"speed_limit", num(r.speed_limit)}};
  if (c.scenario) c.result.summary["nestedness"]["expected_verdict"] = to_string(c.scenario->expected_verdict);
}

void oracle(Context& c, const MatchSolution& sol) {
  const auto t0 = Clock::now();
  const DiscreteInstance inst = sample_instance(*c.model, c.cfg.source_atoms, c.cfg.target_atoms, c.cfg.seed);
  const DiscretePlan plan = solve_transport(inst);
  const MapComparison cmp = compare_with_map(sol, inst, plan);
  const double audit = cyclical_monotonicity_audit(plan, inst.surplus, 3, 20000, c.cfg.seed);
  c.timings["oracle"] = seconds_since(t0);
  c.write_json("oracle.json", {{"instance", to_json(inst)}, {"plan", to_json(plan)}});
  c.result.summary["oracle"] = {{"source_atoms", inst.n_source()},
                                {"target_atoms", inst.n_target()},
                                {"objective", plan.objective},
                                {"dual_objective", plan.dual_objective(inst)},
                                {"duality_gap", std::abs(plan.objective - plan.dual_objective(inst))},
                                {"marginal_error", plan.marginal_error(inst)},
                                {"max_dual_violation", plan.max_dual_violation(inst)},
                                {"pivots", plan.pivots},
                                {"surplus_gap", cmp.surplus_gap},
                                {"dual_gap", cmp.dual_gap},
                                {"dual_shift", cmp.shift},
                                {"cyclical_monotonicity_violation", audit}};
}

void holder(Context& c, const MatchSolution& sol) {
  const HolderFit fit = holder_probe(sol.curve(), c.cfg.holder_window);
  nlohmann::json h = {{"exponent", fit.exponent}, {"points", fit.points}};
  if (c.scenario && c.scenario->endpoint_exponent) h["expected_exponent"] = *c.scenario->endpoint_exponent;
  c.result.summary["holder"] = h;
}

void reduce(Context& c, const MatchSolution* sol) {
  const auto t0 = Clock::now();
  const Model& model = *c.model;
  const IndexDetection det = detect_index_form(model, c.cfg.detection);
  nlohmann::json r = {{"is_index", det.is_index},
                      {"confidence", det.confidence},
                      {"failure_rate", det.failure_rate},
                      {"matched_pairs", det.matched_pairs},
                      {"tests", det.tests}};
  if (!det.is_index) {
    c.result.summary["reduce_1d"] = r;
    throw Error(ErrorKind::InvalidArgument, "surplus is not of pseudo-index form (failure rate " +
                                                format_double(det.failure_rate) + ")");
  }
  const IndexForm form = IndexForm::from_level_field(model, model.target().mid());
  const Rearrangement1D rearr = reduce_and_solve_1d(model, form, c.cfg.reduce_resolution);
  std::string csv = "t,cdf,F1\n";
  for (std::size_t i = 0; i < rearr.nodes().size(); ++i) {
    csv += csv_row({rearr.nodes()[i], rearr.cdf_values()[i], rearr.map(rearr.nodes()[i])});
  }
  c.write_text("reduce_1d.csv", csv);
  const auto probes = ode_probes(rearr, 200);
  r["modularity_sign"] = rearr.modularity_sign();
  r["ode_relative_residual"] = verify_1d_ode(rearr, probes).relative();
  if (sol != nullptr) {
    double e = 0.0;
    for (const Eigen::Index i : sample_ids(model, c.cfg.outputs.map_samples)) {
      const auto x = model.quadrature().point(i);
      e = std::max(e, std::abs(rearr.map_x(x) - sol->map(x)));
    }
    r["max_difference_to_solve"] = e;
  }
  c.timings["reduce_1d"] = seconds_since(t0);
  c.result.summary["reduce_1d"] = r;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::CheckNested: return "check-nested";
    case Command::Oracle: return "oracle";
    case Command::Reduce1d: return "reduce-1d";
    case Command::HolderProbe: return "holder-probe";
  }
  return "solve";
}

Command command_from_string(const std::string& s) {
  for (const Command c : {Command::Solve, Command::CheckNested, Command::Oracle, Command::Reduce1d,
                          Command::HolderProbe}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + s + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json to_json(const NestednessReport& r) {
  nlohmann::json mono_v = nlohmann::json::array();
  for (const auto& v : r.monotone.violations) {
    mono_v.push_back({{"y", v.y}, {"y2", v.y2}, {"x", point(v.x)}, {"margin", v.margin}});
  }
  nlohmann::json dyn_nodes = nlohmann::json::array();
  for (const auto& n : r.dynamic.nodes) {
    dyn_nodes.push_back({{"y", n.y}, {"min", num(n.min)}, {"max", num(n.max)}, {"tol", n.tol}, {"samples", n.samples}});
  }
  nlohmann::json wit = nlohmann::json::array();
  for (const auto& w : r.unique_splitting.witnesses) wit.push_back({{"x", point(w.x)}, {"roots", w.roots}});
  nlohmann::json j = {
      {"verdict", to_string(r.verdict)},
      {"monotonicity",
       {{"pass", r.monotone.pass},
        {"pairs_checked", r.monotone.pairs_checked},
        {"worst_margin", r.monotone.worst_margin},
        {"violations", mono_v}}},
      {"dynamic", {{"pass", r.dynamic.pass}, {"strict", r.dynamic.strict}, {"skipped", r.dynamic.skipped}, {"nodes", dyn_nodes}}},
      {"unique_splitting",
       {{"pass", r.unique_splitting.pass}, {"probes_checked", r.unique_splitting.probes_checked}, {"witnesses", wit}}},
      {"speed_limit", num(r.speed_limit)},
      {"notes", r.notes}};
  if (r.transversality) {
    j["transversality"] = {{"min", num(r.transversality->min)},
                           {"y_at_min", r.transversality->y_at_min},
                           {"x_at_min", point(r.transversality->x_at_min)}};
  }
  return j;
}

RunResult execute(const RunConfig& config, Command command) {
  Context c(config, fs::path(config.out_dir.empty() ? default_out_dir() : config.out_dir));
  fs::create_directories(c.out);
  c.result.summary["command"] = to_string(command);
  c.result.summary["config"] = config.to_json();
  c.result.summary["config"]["out_dir"] = c.out.string();
  build(c);

  const bool want_nested = command == Command::CheckNested || config.require_nested ||
                           (command == Command::Solve && config.outputs.nestedness);
  const MatchSolution sol = solve(c);
  if (command == Command::Reduce1d) {
    reduce(c, &sol);
  } else {
    if (want_nested) nestedness(c, sol);
    if (command == Command::Oracle || (command == Command::Solve && config.outputs.oracle)) oracle(c, sol);
    if (command == Command::HolderProbe || (command == Command::Solve && config.outputs.holder)) holder(c, sol);
    if (command == Command::Solve && config.outputs.reduce_1d) reduce(c, &sol);
  }

  if (config.require_nested && c.result.verdict && *c.result.verdict != Verdict::Nested) {
    c.result.exit_code = kExitNonNested;
  }
  c.result.summary["exit_code"] = c.result.exit_code;
  if (config.outputs.timings) c.result.summary["timings"] = c.timings;
  c.write_json("summary.json", c.result.summary);
  return c.result;
}

int run(const RunConfig& config, Command command, std::ostream& err) {
  try {
    const RunResult r = execute(config, command);
    if (r.exit_code == kExitNonNested) err << "nestor: verdict is " << to_string(*r.verdict) << ", nested required\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "nestor: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "nestor: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "nestor: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace nestor
