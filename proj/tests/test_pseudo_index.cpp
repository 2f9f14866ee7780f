#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nestor/error.hpp"
#include "nestor/nested_solver.hpp"
#include "nestor/pseudo_index.hpp"

using namespace nestor;
using nestor::test::pt;

namespace {

IndexForm first_coordinate() {
  IndexForm f;
  f.index = [](PointRef x) { return x[0]; };
  return f;
}

std::shared_ptr<const Model> polynomial_model(std::vector<PolynomialSurplus::Term> terms, const Vector& lo,
                                              const Vector& hi, int resolution) {
  const int m = static_cast<int>(lo.size());
  return std::make_shared<const Model>(make_box(lo, hi), TargetInterval{0.0, 1.0},
                                       std::make_shared<PolynomialSurplus>(m, std::move(terms)),
                                       [](PointRef) { return 1.0; }, [](double) { return 1.0; },
                                       test::grid(resolution));
}

}  // namespace

TEST(DetectIndexForm, SegmentTargetIsIndex) {
  const auto s = test::scenario("paraboloid-segment", 128);
  const auto d = detect_index_form(s.m());
  EXPECT_TRUE(d.is_index);
  EXPECT_GE(d.matched_pairs, 100);
  EXPECT_LT(d.failure_rate, 0.01);
}

TEST(DetectIndexForm, ArcTargetIsNotIndex) {
  const auto s = test::scenario("ball-circle", 128);
  const auto d = detect_index_form(s.m());
  EXPECT_FALSE(d.is_index);
  EXPECT_FALSE(d.witnesses.empty());
}

TEST(DetectIndexForm, ExplicitIndexSurplus) {
  IndexSurplusParts parts;
  parts.dim = 2;
  parts.index = [](PointRef x) { return x[0] + 0.5 * x[1] * x[1]; };
  parts.index_gradient = [](PointRef x) {
    Vector g(2);
    g << 1.0, x[1];
    return g;
  };
  parts.alpha = [](PointRef x) { return x[1]; };
  parts.sigma = [](double t, double y) { return std::exp(t * y); };
  parts.sigma_y = [](double t, double y) { return t * std::exp(t * y); };
  parts.sigma_yy = [](double t, double y) { return t * t * std::exp(t * y); };
  parts.sigma_ty = [](double t, double y) { return (1.0 + t * y) * std::exp(t * y); };
  const Model m(make_box(Vector::Zero(2), Vector::Ones(2)), TargetInterval{0.0, 1.0},
                std::make_shared<IndexSurplus>(parts), [](PointRef) { return 1.0; }, [](double) { return 1.0; },
                test::grid(128));
  EXPECT_TRUE(detect_index_form(m).is_index);
}

TEST(DetectIndexForm, TooFewPairsThrows) {
  const auto s = test::scenario("paraboloid-segment", 64);
  DetectionSettings d;
  d.sample_points = 20;
  try {
    detect_index_form(s.m(), d);
    FAIL() << "expected InsufficientPairs";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientPairs);
  }
}

TEST(ReduceAndSolve1d, ParaboloidPowerLaw) {
  const auto s = test::scenario("paraboloid-segment", 256);
  const auto r = reduce_and_solve_1d(s.m(), first_coordinate());
  EXPECT_EQ(r.modularity_sign(), 1);
  for (const double t : {0.1, 0.3, 0.5, 0.8}) EXPECT_NEAR(r.map(t), std::pow(t, 1.5), 2e-3);
  const MatchSolution sol = MatchSolution::solve(s.m());
  for (const auto& x : {pt(0.2, 0.1), pt(0.5, -0.4), pt(0.9, 0.3)}) EXPECT_NEAR(r.map_x(x), sol.map(x), 1e-2);
}

TEST(ReduceAndSolve1d, LinearTargetDensity) {
  const auto s = build_scenario("interval-linear");
  const auto r = reduce_and_solve_1d(s.m(), first_coordinate());
  for (const double t : {0.04, 0.25, 0.5, 0.81}) EXPECT_NEAR(r.map(t), std::sqrt(t), 1e-4);
  const auto probes = ode_probes(r, 100);
  EXPECT_LE(verify_1d_ode(r, probes).max_residual, 1e-3);
}

TEST(ReduceAndSolve1d, EqualMarginalsGiveIdentity) {
  const auto s = build_scenario("uniform-1d");
  const auto r = reduce_and_solve_1d(s.m(), first_coordinate());
  for (const double t : {0.1, 0.5, 0.9}) EXPECT_NEAR(r.map(t), t, 1e-6);
  const auto probes = ode_probes(r, 100);
  EXPECT_LE(verify_1d_ode(r, probes).max_residual, 1e-6);
}

TEST(ReduceAndSolve1d, ParaboloidOdeResidual) {
  const auto s = test::scenario("paraboloid-segment", 256);
  const auto r = reduce_and_solve_1d(s.m(), first_coordinate());
  // density of x_1 under mu is (3/2) sqrt(t)
  EXPECT_NEAR(r.source_density(0.25), 0.75, 1e-2);
  const auto probes = ode_probes(r, 100);
  EXPECT_LE(verify_1d_ode(r, probes).relative(), 1e-2);
}

TEST(ReduceAndSolve1d, FromLevelFieldMatchesCoordinate) {
  const auto s = test::scenario("paraboloid-segment", 128);
  const auto a = reduce_and_solve_1d(s.m(), IndexForm::from_level_field(s.m(), 0.5));
  const auto b = reduce_and_solve_1d(s.m(), first_coordinate());
  for (const double t : {0.2, 0.6}) EXPECT_NEAR(a.map(t), b.map(t), 1e-9);
}

TEST(ReduceAndSolve1d, SubmodularReverses) {
  Vector lo = Vector::Zero(1), hi = Vector::Ones(1);
  const auto m = polynomial_model({{-1.0, {1}, 1}}, lo, hi, 2048);
  const auto r = reduce_and_solve_1d(*m, first_coordinate());
  EXPECT_EQ(r.modularity_sign(), -1);
  EXPECT_NEAR(r.map(0.3), 0.7, 1e-4);
}

TEST(ReduceAndSolve1d, MixedSignThrows) {
  Vector lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 1.0;
  // s = y x_1^2: d/dI s_y = 2 x_1 changes sign along I = x_1.
  const auto m = polynomial_model({{1.0, {2, 0}, 1}}, lo, hi, 64);
  try {
    reduce_and_solve_1d(*m, first_coordinate());
    FAIL() << "expected NonMonotoneSign";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonMonotoneSign);
  }
}
