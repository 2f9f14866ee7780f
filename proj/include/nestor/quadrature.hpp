#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nestor/domain.hpp"
#include "nestor/types.hpp"

namespace nestor {

enum class QuadratureMode { TensorGrid, MonteCarlo };

std::string to_string(QuadratureMode mode);
QuadratureMode quadrature_mode_from_string(const std::string& s);

struct QuadratureSettings {
  QuadratureMode mode = QuadratureMode::TensorGrid;
  /// Points per axis (tensor grid) or total sample count (Monte Carlo).
  int resolution = 256;
  std::uint64_t seed = 1;

  /// Midpoint grid with 4096 cells for m = 1, 256/axis for m = 2, 64/axis for
  /// m = 3; seeded Monte Carlo with 2^18 samples for m >= 4.
  static QuadratureSettings defaults_for(int m);
};

/// Interior quadrature points of a Domain with volume weights.
///
/// Every point carries a per-axis cell size (`spacing`). For the tensor grid it
/// is the grid cell; cells cut by the boundary keep their inside volume fraction
/// as weight and sit at the centroid of their inside part; for Monte Carlo it is the side of a cell of equal volume
/// scaled to the box aspect ratio. Points whose axis neighbours at distance
/// spacing_j fall outside the domain are flagged as boundary-adjacent.
class Quadrature {
 public:
  static Quadrature build(const Domain& dom, const QuadratureSettings& settings);

  int dim() const { return static_cast<int>(points_.rows()); }
  Eigen::Index size() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.col(i); }
  const Array& weights() const { return weights_; }
  const Vector& spacing() const { return spacing_; }
  const std::vector<unsigned char>& boundary_flags() const { return boundary_; }
  const QuadratureSettings& settings() const { return settings_; }
  /// Total weight: the estimated volume of the domain.
  double volume() const { return volume_; }

 private:
  Matrix points_;
  Array weights_;
  Vector spacing_;
  std::vector<unsigned char> boundary_;
  QuadratureSettings settings_;
  double volume_ = 0.0;
};

}  // namespace nestor
