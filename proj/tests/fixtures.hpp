#pragma once

#include <cmath>
#include <memory>

#include "nestor/model.hpp"
#include "nestor/scenarios.hpp"
#include "nestor/surplus.hpp"

namespace nestor::test {

inline QuadratureSettings grid(int resolution) {
  QuadratureSettings q;
  q.resolution = resolution;
  return q;
}

/// Unit square, s = y x_1, uniform densities.
inline std::shared_ptr<const Model> unit_square(int resolution = 128) {
  Vector lo = Vector::Zero(2);
  Vector hi = Vector::Ones(2);
  return std::make_shared<const Model>(make_box(lo, hi), TargetInterval{0.0, 1.0}, std::make_shared<SegmentSurplus>(2),
                                       [](PointRef) { return 1.0; }, [](double) { return 1.0; }, grid(resolution));
}

inline Scenario scenario(const std::string& name, int resolution, ScenarioParams p = {}) {
  p.resolution = resolution;
  return build_scenario(name, p);
}

inline Vector pt(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

inline Vector pt(double a) {
  Vector x(1);
  x << a;
  return x;
}

}  // namespace nestor::test
