#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "nestor/error.hpp"
#include "nestor/nested_solver.hpp"

using namespace nestor;
using nestor::test::pt;

namespace {

struct Solved {
  Scenario scenario;
  MatchSolution solution;
};

Solved solve_scenario(const std::string& name, int resolution, ScenarioParams p = {}) {
  Scenario s = resolution > 0 ? test::scenario(name, resolution, p) : build_scenario(name, p);
  MatchSolution sol = MatchSolution::solve(s.m());
  return {std::move(s), std::move(sol)};
}

const Solved& paraboloid() {
  static const Solved s = solve_scenario("paraboloid-segment", 256);
  return s;
}

const Solved& uniform1d() {
  static const Solved s = solve_scenario("uniform-1d", 0);
  return s;
}

// Largest deviation of a - b after removing the best constant.
template <class F, class G>
double shifted_error(F a, G b, double lo, double hi, int n = 200) {
  double dmin = INFINITY, dmax = -INFINITY;
  for (int i = 0; i <= n; ++i) {
    const double y = lo + (hi - lo) * i / n;
    const double d = a(y) - b(y);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  return 0.5 * (dmax - dmin);
}

}  // namespace

TEST(ChebyshevGrid, InteriorAndAscending) {
  const auto y = chebyshev_grid(TargetInterval{0.0, 1.0}, 9);
  ASSERT_EQ(y.size(), 9u);
  EXPECT_GT(y.front(), 0.0);
  EXPECT_LT(y.back(), 1.0);
  EXPECT_TRUE(std::is_sorted(y.begin(), y.end()));
  EXPECT_NEAR(y[4], 0.5, 1e-15);
}

TEST(SolveSplitCurve, UniformIntervalIsIdentity) {
  const SplitCurve& c = uniform1d().solution.curve();
  ASSERT_EQ(c.size(), 257u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.k_plus[i], c.y[i], 1e-5);
    EXPECT_NEAR(c.kprime[i], 1.0, 1e-6);
  }
}

TEST(SolveSplitCurve, ParaboloidMatchesPowerLaw) {
  const SplitCurve& c = paraboloid().solution.curve();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.y[i] < 0.02 || c.y[i] > 0.98) continue;
    EXPECT_NEAR(c.k_plus[i], std::pow(c.y[i], 2.0 / 3.0), 5e-3) << "y = " << c.y[i];
  }
  EXPECT_NEAR(c.kprime_at(0.5), 2.0 / 3.0 * std::pow(0.5, -1.0 / 3.0), 1e-2);
  EXPECT_NEAR(c.kprime_fd_at(0.5), 2.0 / 3.0 * std::pow(0.5, -1.0 / 3.0), 1e-2);
}

TEST(SolveSplitCurve, BracketsAreOrdered) {
  const SplitCurve& c = paraboloid().solution.curve();
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_LE(c.k_minus[i], c.k_plus[i]);
    if (i > 0) {
      EXPECT_GE(c.k_plus[i], c.k_plus[i - 1]);
    }
  }
}

TEST(HusbandPayoff, ClosedForms) {
  const auto& u1 = uniform1d().solution;
  EXPECT_LT(shifted_error([&](double y) { return u1.v(y); }, [](double y) { return 0.5 * y * y; }, 0.0, 1.0), 1e-5);
  const auto& p = paraboloid().solution;
  EXPECT_LT(shifted_error([&](double y) { return p.v(y); }, [](double y) { return 0.6 * std::pow(y, 5.0 / 3.0); },
                          0.0, 1.0),
            1e-2);
}

TEST(HusbandPayoff, ConstantLevelGivesConstantPayoff) {
  // Pie slice at theta0 = pi/4 has k = 0, so v is constant.
  const Solved pie = solve_scenario("pie-slice", 128);
  const auto& t = pie.scenario.m().target();
  EXPECT_LT(shifted_error([&](double y) { return pie.solution.v(y); }, [](double) { return 0.0; }, t.lo, t.hi), 1e-3);
}

TEST(OptimalMap, ParaboloidProbe) {
  const auto& sol = paraboloid().solution;
  EXPECT_NEAR(sol.map(pt(0.49, 0.1)), std::pow(0.49, 1.5), 5e-3);
  EXPECT_NEAR(sol.map(pt(0.49, 0.1), MapMethod::BySplitting), std::pow(0.49, 1.5), 5e-3);
}

TEST(OptimalMap, UniformIsIdentity) {
  for (const double x : {0.1, 0.37, 0.9}) EXPECT_NEAR(uniform1d().solution.map(pt(x)), x, 1e-5);
}

TEST(OptimalMap, SplittingRootOnSolvedLevelSet) {
  const auto& sol = paraboloid().solution;
  const double y = 0.3;
  const Vector x = pt(sol.curve().k(y), 0.2);
  EXPECT_NEAR(sol.map(x, MapMethod::BySplitting), y, 2e-3);
  EXPECT_NEAR(sol.map(x), y, 1e-6);
}

TEST(OptimalMap, SplittingThrowsOnBallCircle) {
  const Solved ball = solve_scenario("ball-circle", 96);
  bool thrown = false;
  for (const double a : {0.3, 1.2, 2.5, -2.0}) {
    try {
      ball.solution.map(pt(0.6 * std::cos(a), 0.6 * std::sin(a)), MapMethod::BySplitting);
    } catch (const NonNestedError& e) {
      thrown = true;
      EXPECT_GE(e.roots().size(), 2u);
    }
  }
  EXPECT_TRUE(thrown);
}

TEST(WifePayoff, ParaboloidPoint) {
  const auto& sol = paraboloid().solution;
  // Pin the additive constant: v(0) = 0 as in the closed form.
  const double c = sol.v(0.0);
  const WifePayoff w = sol.wife(pt(0.64, 0.0));
  EXPECT_NEAR(w.u + c, 0.4 * std::pow(0.64, 2.5), 1e-2);
  EXPECT_NEAR(w.argmax, 0.512, 5e-3);
}

TEST(WifePayoff, UniformInterval) {
  const auto& sol = uniform1d().solution;
  const double c = sol.v(0.0);
  for (const double x : {0.2, 0.7}) EXPECT_NEAR(sol.u(pt(x)) + c, 0.5 * x * x, 1e-5);
}

TEST(MapGradient, ParaboloidAndIdentity) {
  const Vector d = paraboloid().solution.map_gradient(pt(0.25, 0.0));
  EXPECT_NEAR(d[0], 0.75, 1e-2);
  EXPECT_NEAR(d[1], 0.0, 1e-12);
  EXPECT_NEAR(uniform1d().solution.map_gradient(pt(0.4))[0], 1.0, 1e-5);
}

TEST(MapGradient, ZeroSpeedThreshold) {
  SolverSettings s;
  s.zero_speed = 10.0;
  try {
    map_gradient(paraboloid().scenario.m(), paraboloid().solution.curve(), pt(0.25, 0.0), s);
    FAIL() << "expected ZeroSpeed";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroSpeed);
  }
}

TEST(BalanceResidual, SmallOnClosedForms) {
  EXPECT_LE(std::abs(balance_residual(paraboloid().scenario.m(), paraboloid().solution.curve(), 0.5)), 0.02);
  EXPECT_LE(std::abs(balance_residual(uniform1d().scenario.m(), uniform1d().solution.curve(), 0.5)), 1e-6);
}

TEST(BalanceResidual, GrowsWithPerturbedCurve) {
  const Model& model = paraboloid().scenario.m();
  SplitCurve bent = paraboloid().solution.curve();
  for (std::size_t i = 0; i < bent.size(); ++i) bent.k_plus[i] *= 1.0 + 0.01 * bent.y[i];
  bent.finalize();
  const double base = std::abs(balance_residual(model, paraboloid().solution.curve(), 0.5));
  EXPECT_GT(std::abs(balance_residual(model, bent, 0.5)), base);
}

TEST(Pushforward, WithinTolerance) {
  EXPECT_LE(pushforward_distance(paraboloid().scenario.m(), paraboloid().solution.curve()), 0.01);
  EXPECT_LE(pushforward_distance(uniform1d().scenario.m(), uniform1d().solution.curve()), 1e-3);
}

TEST(Pushforward, BallCircleAngleMapPushesForward) {
  const Scenario ball = test::scenario("ball-circle", 128);
  EXPECT_LE(analytic_pushforward_distance(ball), 0.02);
}

TEST(IntervalLinear, SquareRootMap) {
  const Solved s = solve_scenario("interval-linear", 0);
  const SplitCurve& c = s.solution.curve();
  for (std::size_t i = 0; i < c.size(); i += 16) EXPECT_NEAR(c.k_plus[i], c.y[i] * c.y[i], 1e-4);
  for (const double x : {0.09, 0.25, 0.64}) EXPECT_NEAR(s.solution.map(pt(x)), std::sqrt(x), 1e-4);
}
