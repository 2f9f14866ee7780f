#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nestor/error.hpp"
#include "nestor/scenarios.hpp"

using namespace nestor;

TEST(Scenarios, ListedNamesBuild) {
  const auto list = list_scenarios();
  ASSERT_EQ(list.size(), 6u);
  for (const auto& info : list) {
    ScenarioParams p;
    p.resolution = 16;
    const Scenario s = build_scenario(info.name, p);
    EXPECT_EQ(s.name, info.name);
    EXPECT_EQ(s.describe()["name"], info.name);
  }
}

TEST(Scenarios, UnknownNameThrows) {
  try {
    build_scenario("torus-knot");
    FAIL() << "expected UnknownScenario";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownScenario);
  }
}

TEST(Scenarios, ParameterRanges) {
  ScenarioParams p;
  p.theta0 = 3.5;
  EXPECT_THROW(build_scenario("pie-slice", p), Error);
  p = {};
  p.m = 4;
  EXPECT_THROW(build_scenario("paraboloid-segment", p), Error);
  p = {};
  p.flatness = 0.5;
  EXPECT_THROW(build_scenario("flat-paraboloid", p), Error);
  p = {};
  p.inner_radius = 1.0;
  EXPECT_THROW(build_scenario("ball-circle", p), Error);
}

TEST(Scenarios, PieVerdictFollowsAngle) {
  ScenarioParams p;
  p.resolution = 16;
  p.theta0 = 1.2;
  EXPECT_EQ(build_scenario("pie-slice", p).expected_verdict, Verdict::Nested);
  p.theta0 = 2.0;
  EXPECT_EQ(build_scenario("pie-slice", p).expected_verdict, Verdict::NonNested);
  EXPECT_EQ(build_scenario("ball-circle", p).expected_verdict, Verdict::NonNested);
}

TEST(Scenarios, AnalyticMapsPushForward) {
  for (const char* name : {"paraboloid-segment", "pie-slice", "ball-circle"}) {
    EXPECT_LE(analytic_pushforward_distance(test::scenario(name, 256)), 1e-2) << name;
  }
  for (const char* name : {"uniform-1d", "interval-linear"}) {
    EXPECT_LE(analytic_pushforward_distance(build_scenario(name)), 1e-3) << name;
  }
  ScenarioParams p;
  p.m = 3;
  EXPECT_LE(analytic_pushforward_distance(test::scenario("paraboloid-segment", 64, p)), 2e-2);
}

TEST(Scenarios, AnalyticPotentialsAreTightOnGraph) {
  for (const char* name : {"paraboloid-segment", "pie-slice"}) {
    EXPECT_LE(analytic_duality_gap(test::scenario(name, 64)), 1e-12) << name;
  }
  EXPECT_LE(analytic_duality_gap(build_scenario("interval-linear")), 1e-12);
}

TEST(Scenarios, FlatParaboloidExponent) {
  ScenarioParams p;
  p.flatness = 2.0;
  p.resolution = 16;
  const Scenario s = build_scenario("flat-paraboloid", p);
  ASSERT_TRUE(s.endpoint_exponent.has_value());
  EXPECT_NEAR(*s.endpoint_exponent, 1.0 / 1.25, 1e-15);
}

TEST(HolderProbe, ParaboloidTwoThirds) {
  const Scenario s = test::scenario("paraboloid-segment", 256);
  const MatchSolution sol = MatchSolution::solve(s.m());
  const HolderFit fit = holder_probe(sol.curve());
  EXPECT_NEAR(fit.exponent, 2.0 / 3.0, 0.05);
  EXPECT_GE(fit.points, 5);
}

TEST(HolderProbe, QuadraticLevel) {
  const Scenario s = build_scenario("interval-linear");
  const MatchSolution sol = MatchSolution::solve(s.m());
  EXPECT_NEAR(holder_probe(sol.curve()).exponent, 2.0, 0.05);
}

TEST(HolderProbe, NarrowWindowThrows) {
  const Scenario s = build_scenario("uniform-1d");
  SolverSettings st;
  st.y_nodes = 9;
  const MatchSolution sol = MatchSolution::solve(s.m(), st);
  try {
    holder_probe(sol.curve(), {0.01, 0.02});
    FAIL() << "expected InsufficientRange";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRange);
  }
}

TEST(PieThreshold, BracketContainsRightAngle) {
  ScenarioParams p;
  p.resolution = 128;
  const ThresholdBracket b = bracket_pie_threshold(1.2, 2.0, 0.2, p);
  EXPECT_LE(b.nested_at, M_PI / 2);
  EXPECT_GE(b.non_nested_at, M_PI / 2);
  EXPECT_LE(b.non_nested_at - b.nested_at, 0.2);
  EXPECT_GE(b.evaluations.size(), 4u);
}
