// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "nestor/discrete_oracle.hpp"
#include "nestor/error.hpp"
#include "nestor/level_sets.hpp"
#include "nestor/nested_solver.hpp"
#include "nestor/nestedness.hpp"
#include "nestor/pseudo_index.hpp"
#include "nestor/scenarios.hpp"

using namespace nestor;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Fixture {
  std::string label;
  Scenario scenario;
  std::unique_ptr<MatchSolution> solution;
  double build_seconds = 0.0;
};

std::unique_ptr<Fixture> solve(const std::string& label, const std::string& name, ScenarioParams p = {}) {
  auto f = std::make_unique<Fixture>();
  f->label = label;
  const auto t0 = Clock::now();
  f->scenario = build_scenario(name, p);
  f->solution = std::make_unique<MatchSolution>(MatchSolution::solve(f->scenario.m()));
  f->build_seconds = since(t0);
  std::printf("  solved %-22s in %7.2f s\n", label.c_str(), f->build_seconds);
  std::fflush(stdout);
  return f;
}

/// Uniform points of X whose axis neighbours at distance `margin * box scale` are also in X.
std::vector<Vector> interior_probes(const Model& model, int count, std::uint64_t seed, double margin = 0.01) {
  const Domain& d = model.domain();
  const double h = margin * d.box_scale();
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  Vector x(d.dim);
  while (static_cast<int>(out.size()) < count) {
    for (int j = 0; j < d.dim; ++j) x[j] = std::uniform_real_distribution<double>(d.lo[j], d.hi[j])(rng);
    bool ok = d.inside(x);
    for (int j = 0; ok && j < d.dim; ++j) {
      Vector a = x, b = x;
      a[j] -= h;
      b[j] += h;
      ok = d.inside(a) && d.inside(b);
    }
    if (ok) out.push_back(x);
  }
  return out;
}

struct Outcome {
  int failures = 0;
  void report(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_map_error(const Fixture& fx, const std::vector<Vector>& probes) {
  double e = 0.0;
  for (const auto& x : probes) e = std::max(e, std::abs(fx.solution->map(x) - fx.scenario.analytic_map(x)));
  return e;
}

/// sup |s_yy| and sup |grad_x s_y| / f over quadrature points and curve nodes.
struct Sups {
  double s_yy = 0.0;
  double grad = 0.0;
  double grad_over_f = 0.0;
};

Sups sampled_sups(const Model& model, const SplitCurve& curve) {
  Sups s;
  const Quadrature& q = model.quadrature();
  const Array& f = model.density_at_points();
  Vector g(model.dim());
  for (const double y : curve.y) {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const auto x = q.point(i);
      s.s_yy = std::max(s.s_yy, std::abs(model.surplus().dyy(x, y)));
      model.surplus().grad_x_dy(x, y, g);
      const double n = g.norm();
      s.grad = std::max(s.grad, n);
      if (f[i] > 0.0) s.grad_over_f = std::max(s.grad_over_f, n / f[i]);
    }
  }
  return s;
}

}  // namespace

int main() {
  Outcome out;
  const auto t_all = Clock::now();

  ScenarioParams m3;
  m3.m = 3;
  ScenarioParams quarter;
  quarter.theta0 = M_PI / 4;
  ScenarioParams flat;
  flat.flatness = 3.0;

  auto para2 = solve("paraboloid-segment m=2", "paraboloid-segment");
  const auto probes2 = interior_probes(para2->scenario.m(), 500, 11);
  const double c1_map = max_map_error(*para2, probes2);
  const double c1_seconds = para2->build_seconds;

  auto para3 = solve("paraboloid-segment m=3", "paraboloid-segment", m3);
  const auto probes3 = interior_probes(para3->scenario.m(), 500, 12);
  const double c2_map = max_map_error(*para3, probes3);
  const double c2_seconds = para3->build_seconds;

  std::vector<std::unique_ptr<Fixture>> others;
  others.push_back(solve("flat-paraboloid k=3", "flat-paraboloid", flat));
  others.push_back(solve("pie-slice pi/4", "pie-slice", quarter));
  others.push_back(solve("uniform-1d", "uniform-1d"));
  others.push_back(solve("interval-linear", "interval-linear"));
  std::vector<const Fixture*> nested = {para2.get(), para3.get()};
  for (const auto& f : others) nested.push_back(f.get());

  // 1
  {
    const Scenario& sc = para2->scenario;
    const SplitCurve& c = para2->solution->curve();
    double k_err = 0.0;
    for (int i = 0; i <= 480; ++i) {
      const double y = 0.02 + 0.96 * i / 480.0;
      k_err = std::max(k_err, std::abs(c.k(y) - sc.analytic_k(y)));
    }
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i <= 500; ++i) {
      const double y = i / 500.0;
      const double d = para2->solution->v(y) - sc.analytic_v(y);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double v_err = 0.5 * (hi - lo);
    out.report(1, c1_map <= 5e-3 && k_err <= 5e-3 && v_err <= 1e-2 && c1_seconds <= 60.0,
               fmt("paraboloid m=2 256^2: max|F-x1^1.5| %.2e (<=5e-3), max|k-y^(2/3)| %.2e (<=5e-3), "
                   "max|v-(3/5)y^(5/3)| after shift %.2e (<=1e-2), build+solve %.1f s (<=60)",
                   c1_map, k_err, v_err, c1_seconds));
  }

  // 2
  out.report(2, c2_map <= 2e-2 && c2_seconds <= 300.0,
             fmt("paraboloid m=3 64^3: max|F-x1^2| %.2e (<=2e-2) over 500 probes, build+solve %.1f s (<=300)", c2_map,
                 c2_seconds));

  // 3
  {
    bool pass = true;
    std::string detail;
    for (const Fixture* fx : {para2.get(), para3.get()}) {
      const SplitCurve& c = fx->solution->curve();
      double worst = 0.0;
      int nodes = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.tangential[i] || c.y[i] < 0.05 || c.y[i] > 0.95) continue;
        worst = std::max(worst, std::abs(balance_residual(fx->scenario.m(), c, c.y[i], c.epsilon[i])));
        ++nodes;
      }
      pass = pass && worst <= 0.02;
      detail += fmt("%s%s max balance residual %.2e over %d nodes", detail.empty() ? "" : "; ", fx->label.c_str(),
                    worst, nodes);
    }
    out.report(3, pass, detail + " (<=0.02)");
  }

  // 4
  {
    const Model& model = para2->scenario.m();
    const SplitCurve& c = para2->solution->curve();
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!c.tangential[i] && c.y[i] >= 0.05 && c.y[i] <= 0.95) ids.push_back(i);
    double formula = 0.0, fd = 0.0;
    int used = 0;
    for (int j = 0; j < 50; ++j) {
      const std::size_t i = ids[static_cast<std::size_t>(j) * (ids.size() - 1) / 49];
      const GradH gh = grad_h(model, c.y[i], c.k_plus[i], c.epsilon[i]);
      formula = std::max(formula, std::abs(c.kprime[i] + gh.h_y / gh.h_k));
      fd = std::max(fd, std::abs(c.kprime[i] - c.kprime_fd[i]));
      ++used;
    }
    out.report(4, formula <= 1e-2 && fd <= 1e-2,
               fmt("paraboloid m=2, %d interior nodes: max|k'+h_y/h_k| %.2e (<=1e-2), max|k'-FD(k)| %.2e (<=1e-2)",
                   used, formula, fd));
  }

  // 5
  {
    const auto t0 = Clock::now();
    const DiscreteInstance inst = sample_instance(para2->scenario.m(), 400, 40, 1);
    const DiscretePlan plan = solve_transport(inst);
    const MapComparison cmp = compare_with_map(*para2->solution, inst, plan);
    const double oracle_seconds = since(t0);
    std::mt19937_64 rng(2024);
    double worst_gap = 0.0, worst_violation = 0.0, worst_marginal = 0.0;
    for (int r = 0; r < 100; ++r) {
      const int n = std::uniform_int_distribution<int>(1, 200)(rng);
      const int m = std::uniform_int_distribution<int>(1, 50)(rng);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Matrix pts(1, n);
      Vector a(n), b(m), ys(m);
      Matrix s(n, m);
      for (int i = 0; i < n; ++i) {
        pts(0, i) = unit(rng);
        a[i] = 0.05 + unit(rng);
      }
      for (int j = 0; j < m; ++j) {
        ys[j] = unit(rng);
        b[j] = 0.05 + unit(rng);
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) s(i, j) = std::normal_distribution<double>(0.0, 1.0)(rng);
      a /= a.sum();
      b /= b.sum();
      const DiscreteInstance ri = make_instance(pts, a, ys, b, s);
      const DiscretePlan rp = solve_transport(ri);
      worst_gap = std::max(worst_gap, std::abs(rp.objective - rp.dual_objective(ri)));
      worst_violation = std::max(worst_violation, rp.max_dual_violation(ri));
      worst_marginal = std::max(worst_marginal, rp.marginal_error(ri));
    }
    out.report(5,
               cmp.surplus_gap <= 5e-3 && cmp.dual_gap <= 2e-2 && worst_gap <= 1e-9 && worst_violation <= 1e-9 &&
                   worst_marginal <= 1e-9,
               fmt("400x40 atoms: surplus_gap %.2e (<=5e-3), dual_gap after shift %.2e (<=2e-2), %.1f s; "
                   "100 random instances up to 200x50: |primal-dual| %.1e, dual violation %.1e, marginal error %.1e "
                   "(all <=1e-9)",
                   cmp.surplus_gap, cmp.dual_gap, oracle_seconds, worst_gap, worst_violation, worst_marginal));
  }

  // 6
  {
    const NestednessReport pr = assess_nestedness(*para2->solution);
    const bool para_ok = pr.verdict == Verdict::Nested && pr.monotone.pass && pr.dynamic.pass && pr.unique_splitting.pass;
    auto ball = solve("ball-circle", "ball-circle");
    const NestednessReport br = assess_nestedness(*ball->solution);
    const bool ball_ok = br.verdict == Verdict::NonNested && !br.unique_splitting.witnesses.empty();
    const auto t0 = Clock::now();
    const ThresholdBracket b = bracket_pie_threshold(M_PI / 4, 3 * M_PI / 4, 0.05);
    const double half = M_PI / 2;
    const bool pie_ok = b.nested_at < b.non_nested_at && std::abs(b.nested_at - half) <= 0.05 &&
                        std::abs(b.non_nested_at - half) <= 0.05;
    std::string evals;
    for (const auto& [theta, v] : b.evaluations) evals += fmt(" %.4f:%s", theta, to_string(v).c_str());
    out.report(6, para_ok && ball_ok && pie_ok,
               fmt("paraboloid %s (monotone %d, dynamic %d, unique splitting %d); ball-circle %s with %zu splitting "
                   "witnesses; pie flip in [%.4f, %.4f] vs pi/2 = %.4f +- 0.05 (%.0f s;%s)",
                   to_string(pr.verdict).c_str(), pr.monotone.pass, pr.dynamic.pass, pr.unique_splitting.pass,
                   to_string(br.verdict).c_str(), br.unique_splitting.witnesses.size(), b.nested_at, b.non_nested_at,
                   half, since(t0), evals.c_str()));
  }

  // 7
  {
    const HolderFit h2 = holder_probe(para2->solution->curve());
    const HolderFit h3 = holder_probe(para3->solution->curve());
    out.report(7, std::abs(h2.exponent - 2.0 / 3.0) <= 0.05 && std::abs(h3.exponent - 0.5) <= 0.05,
               fmt("fitted exponent m=2 %.4f (2/3 +- 0.05, %d nodes), m=3 %.4f (1/2 +- 0.05, %d nodes)", h2.exponent,
                   h2.points, h3.exponent, h3.points));
  }

  // 8
  {
    bool pass = true;
    std::string detail;
    for (const Fixture* fx : nested) {
      const Model& model = fx->scenario.m();
      const MatchSolution& sol = *fx->solution;
      const double scale = model.surplus_scale();
      const TargetInterval& tgt = model.target();
      std::mt19937_64 rng(77);
      std::uniform_real_distribution<double> ydist(tgt.lo, tgt.hi);
      double min_slack = INFINITY, graph_gap = 0.0;
      for (const auto& x : interior_probes(model, 10000, 78, 0.0)) {
        const double u = sol.u(x);
        const double y = ydist(rng);
        min_slack = std::min(min_slack, u + sol.v(y) - model.surplus().value(x, y));
        const double fx_y = sol.map(x);
        graph_gap = std::max(graph_gap, std::abs(u + sol.v(fx_y) - model.surplus().value(x, fx_y)));
      }
      const bool ok = min_slack >= -1e-6 * scale && graph_gap <= 1e-4 * scale;
      pass = pass && ok;
      detail += fmt("%s%s min(u+v-s)/scale %.1e, graph gap/scale %.1e", detail.empty() ? "" : "; ",
                    fx->label.c_str(), min_slack / scale, graph_gap / scale);
    }
    out.report(8, pass, detail + " (>= -1e-6, <= 1e-4; 1e4 samples each)");
  }

  // 9 and 11 share the sampled sups.
  std::map<const Fixture*, Sups> sups;
  for (const Fixture* fx : nested) sups[fx] = sampled_sups(fx->scenario.m(), fx->solution->curve());

  // 9
  {
    bool pass = true;
    std::string detail;
    for (const Fixture* fx : nested) {
      const Model& model = fx->scenario.m();
      const SplitCurve& c = fx->solution->curve();
      const Sups& s = sups[fx];
      double worst = 0.0;
      int nodes = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.tangential[i] || c.area[i] <= 0.0) continue;
        const double bound = s.s_yy + model.g(c.y[i]) * s.grad_over_f / c.area[i];
        worst = std::max(worst, std::abs(c.kprime[i]) / bound);
        ++nodes;
      }
      pass = pass && worst <= 1.1;
      detail += fmt("%s%s max |k'|/bound %.3f over %d nodes", detail.empty() ? "" : "; ", fx->label.c_str(), worst,
                    nodes);
    }
    out.report(9, pass, detail + " (<=1.1)");
  }

  // 10
  {
    const IndexDetection seg = detect_index_form(para2->scenario.m());
    const Scenario ball = build_scenario("ball-circle");
    const IndexDetection arc = detect_index_form(ball.m());
    IndexForm form;
    form.index = [](PointRef x) { return x[0]; };
    const Rearrangement1D r = reduce_and_solve_1d(para2->scenario.m(), form);
    double diff = 0.0;
    for (const auto& x : probes2) diff = std::max(diff, std::abs(r.map_x(x) - para2->solution->map(x)));
    const double ode = verify_1d_ode(r, ode_probes(r, 200)).relative();
    out.report(10, seg.is_index && !arc.is_index && diff <= 1e-2 && ode <= 1e-2,
               fmt("detector segment %s (failure rate %.3f), arc %s (failure rate %.3f); reduced vs full map %.2e "
                   "(<=1e-2); ODE relative residual %.2e (<=1e-2)",
                   seg.is_index ? "true" : "false", seg.failure_rate, arc.is_index ? "true" : "false",
                   arc.failure_rate, diff, ode));
  }

  // 11
  {
    bool pass = true;
    std::string detail;
    for (const Fixture* fx : {para2.get(), para3.get(), others[0].get(), others[1].get()}) {
      const Model& model = fx->scenario.m();
      const MatchSolution& sol = *fx->solution;
      const double h = 1e-4 * model.domain().box_scale();
      double rel = 0.0;
      int used = 0, zero_speed = 0;
      for (const auto& x : interior_probes(model, 200, 91, 0.02)) {
        Vector df;
        try {
          df = sol.map_gradient(x);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroSpeed) throw;
          ++zero_speed;
          continue;
        }
        Vector fd(model.dim());
        for (int j = 0; j < model.dim(); ++j) {
          Vector a = x, b = x;
          a[j] -= h;
          b[j] += h;
          fd[j] = (sol.map(b) - sol.map(a)) / (2 * h);
        }
        rel = std::max(rel, (df - fd).norm() / std::max(fd.norm(), 1e-12));
        ++used;
      }
      const double ell = speed_limit(model, sol.curve(), model.target());
      std::string lip = "l <= 0, bound not applicable";
      bool lip_ok = true;
      if (ell > 0.0) {
        const double sampled = sampled_map_lipschitz(sol, 1000, 5);
        const double bound = sups[fx].grad / ell * 1.1;
        lip_ok = sampled <= bound;
        lip = fmt("l %.3f, Lipschitz %.3f vs bound %.3f", ell, sampled, bound);
      }
      pass = pass && rel <= 1e-2 && lip_ok;
      detail += fmt("%s%s DF rel err %.2e over %d probes (%d zero-speed), %s", detail.empty() ? "" : "; ",
                    fx->label.c_str(), rel, used, zero_speed, lip.c_str());
    }
    out.report(11, pass, detail + " (DF <=1e-2)");
  }

  std::printf("%d of 11 criteria failed, %.0f s total\n", out.failures, since(t_all));
  return out.failures == 0 ? 0 : 1;
}
