#pragma once

#include <functional>
#include <optional>
#include <string>

#include "nestor/types.hpp"

namespace nestor {

/// Implicit source region X in R^m: bounding box plus an inside-indicator.
///
/// `inside` is false everywhere outside the box (the factories below enforce
/// this). `boundary_normal`, when set, maps points near the boundary to the
/// outward unit normal of the closest boundary piece.
struct Domain {
  int dim = 0;
  Vector lo;
  Vector hi;
  std::function<bool(PointRef)> inside;
  std::function<Vector(PointRef)> boundary_normal;
  std::optional<double> volume_hint;
  std::string name;

  bool has_boundary_oracle() const { return static_cast<bool>(boundary_normal); }
  bool in_box(PointRef x) const;
  /// Diagonal length of the bounding box.
  double box_scale() const;
  double box_volume() const;
  /// Throws InvalidArgument when the box is flat or the indicator is missing.
  void validate() const;
};

/// Open box (lo, hi).
Domain make_box(const Vector& lo, const Vector& hi);
Domain make_interval(double a, double b);

/// {(1/2)(x_2^2 + ... + x_m^2)^flatness < x_1 < height}. flatness = 1 is the
/// solid paraboloid.
Domain make_paraboloid(int m, double flatness = 1.0, double height = 1.0);

/// Spherical shell {r_inner < |x| < r_outer}; r_inner = 0 gives the punctured ball.
Domain make_shell(int m, double r_inner, double r_outer);

/// Planar sector {0 < r < radius, |angle| < theta0}, 0 < theta0 < pi.
Domain make_pie(double theta0, double radius = 1.0);

}  // namespace nestor
