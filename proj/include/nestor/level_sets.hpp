#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nestor/cell_kernel.hpp"
#include "nestor/model.hpp"
#include "nestor/types.hpp"

namespace nestor {

enum class Estimator { Band, Contour2d };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct SurfaceIntegralResult {
  double value = 0.0;
  Eigen::Index band_count = 0;
  double epsilon = 0.0;
  Estimator estimator = Estimator::Band;
};

struct GradH {
  double h_y = 0.0;
  double h_k = 0.0;
};

struct LevelSetSizes {
  double area = 0.0;
  std::optional<double> boundary;  // unavailable without a boundary oracle (or for m = 1)
};

/// s_y(., y) sampled on the quadrature of a model, with the per-cell spread of
/// the linearised field. Every level-set quantity at a fixed y is computed from
/// one of these.
///
/// Sublevel masses integrate the smoothed cell kernel of the linearised field
/// below k, so mass(k) is C^1 and the discrete co-area identity holds between
/// masses and band integrals.
class LevelField {
 public:
  LevelField(const Model& model, double y);

  const Model& model() const { return *model_; }
  double y() const { return y_; }
  Eigen::Index size() const { return values_.size(); }
  const Array& values() const { return values_; }
  const Array& grad_norms() const { return grad_norms_; }
  const Matrix& gradients() const { return gradients_; }
  const CellSpread& spread(Eigen::Index i) const { return spreads_[static_cast<std::size_t>(i)]; }

  /// Smallest and largest level reached on the sampled cells.
  double min_level() const { return min_level_; }
  double max_level() const { return max_level_; }
  double max_grad_norm() const { return max_grad_; }

  double sublevel_mass(double k) const;

  /// 2 * (largest grid spacing) * sup |grad_x s_y|.
  double default_epsilon() const;
  /// default_epsilon() clipped to half the distance from k to the nearest
  /// sampled level extreme, so the band is not cut off at the end of the range.
  double default_epsilon(double k) const;

  /// Band weight of point i: the fraction of its cell with |s_y - k| < eps,
  /// divided by 2 eps.
  double band_weight(Eigen::Index i, double k, double eps) const {
    return cell_fraction_between(k - eps - values_[i], k + eps - values_[i], spreads_[static_cast<std::size_t>(i)]) /
           (2.0 * eps);
  }

  /// Co-area band estimate of the integral of `integrand(i)` over {s_y = k}:
  /// sum_i w_i integrand(i) |grad_x s_y|_i band_weight(i). Sets `count` to the
  /// number of contributing points.
  template <class F>
  double band_integral(double k, double eps, F&& integrand, Eigen::Index* count = nullptr) const {
    const Array& w = model_->quadrature().weights();
    double sum = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (std::abs(values_[i] - k) >= eps + spreads_[static_cast<std::size_t>(i)].half) continue;
      const double bw = band_weight(i, k, eps);
      if (bw <= 0.0) continue;
      ++used;
      sum += w[i] * integrand(i) * grad_norms_[i] * bw;
    }
    if (count) *count = used;
    return sum;
  }

 private:
  const Model* model_;
  double y_;
  Array values_;
  Array grad_norms_;
  Matrix gradients_;
  std::vector<CellSpread> spreads_;
  double min_level_ = 0.0;
  double max_level_ = 0.0;
  double max_grad_ = 0.0;
};

/// mu[{x in X : s_y(x, y) <= k}].
double sublevel_mass(const Model& model, double y, double k);

/// h(y, k) = sublevel mass - G(y).
double split_function(const Model& model, double y, double k);

/// Integral of `integrand` over the level set {s_y(., y) = k} in X. epsilon <= 0
/// selects the automatic band width. Throws EmptyBand when nothing is found.
SurfaceIntegralResult surface_integral(const Model& model, double y, double k,
                                       const std::function<double(PointRef)>& integrand, double epsilon = 0.0,
                                       Estimator estimator = Estimator::Band);

/// Partial derivatives of the split function from the band estimator.
GradH grad_h(const Model& model, double y, double k, double epsilon = 0.0);
GradH grad_h(const LevelField& field, double k, double epsilon);

/// (kprime - s_yy(x, y)) / |grad_x s_y(x, y)|. Throws Degenerate when the
/// gradient is below 1e-8 of the box scale.
double normal_velocity(const Model& model, double y, double k, double kprime, PointRef x);

/// Area A of the level set and its boundary measure B (for m = 2 the number of
/// endpoints of the clipped contour).
LevelSetSizes level_set_sizes(const Model& model, double y, double k, double epsilon = 0.0,
                              Estimator estimator = Estimator::Band);

struct TangentialCheck {
  /// Band mass carried by boundary-adjacent cells where the level set runs
  /// along the boundary, as a fraction of the level-set area.
  double boundary_fraction = 0.0;
  bool tangential = false;
};

/// Flags (y, k) as tangential when more than `threshold` of the band lies along
/// the boundary. Boundary cells count when 1 - (n_X . n_=)^2 < 0.1, or all of
/// them when no boundary oracle exists. Never tangential for m = 1.
TangentialCheck tangential_check(const LevelField& field, double k, double epsilon, double threshold = 0.05);

/// 1 - (n_X . n_=)^2 at a boundary-adjacent point.
double transversality_at(const Model& model, double y, PointRef x);

}  // namespace nestor
