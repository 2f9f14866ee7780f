#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "nestor/model.hpp"

namespace nestor {

struct ContourPiece {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

/// Level set {s_y(., y) = k} of a planar model as line pieces clipped to X.
struct Contour2d {
  std::vector<ContourPiece> pieces;
  /// Number of piece ends where the contour leaves the domain.
  int boundary_endpoints = 0;
  double length = 0.0;
};

/// Marching squares on the (n+1)^2 vertex grid spanning the bounding box, with
/// n the quadrature resolution unless given. Saddle cells are resolved by the
/// cell-centre value; segments are clipped to the domain by bisection on the
/// indicator.
Contour2d extract_contour2d(const Model& model, double y, double k, int resolution = 0);

/// Three-point Gauss-Legendre rule on every piece.
double contour_integral(const Contour2d& contour, const std::function<double(PointRef)>& integrand);

}  // namespace nestor
