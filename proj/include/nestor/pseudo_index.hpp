#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nestor/model.hpp"
#include "nestor/types.hpp"

namespace nestor {

struct PairWitness {
  Vector x;
  Vector x2;
  double y0 = 0.0;
  double y1 = 0.0;
  /// |s_y(x, y0) - s_y(x2, y0)| and |s_y(x, y1) - s_y(x2, y1)|.
  double gap0 = 0.0;
  double gap1 = 0.0;
};

struct IndexDetection {
  bool is_index = false;
  /// 1 - failure rate.
  double confidence = 0.0;
  double failure_rate = 0.0;
  int matched_pairs = 0;
  int tests = 0;
  std::vector<PairWitness> witnesses;
};

struct DetectionSettings {
  /// Quadrature points sampled for matching.
  int sample_points = 20000;
  int max_pairs = 4000;
  /// Values of y1 tested per matched pair.
  int y_tests = 8;
  /// Level-matching tolerance at y0, relative to the range of s_y(., y0).
  double match_tol = 1e-3;
  /// Minimum separation of a matched pair, relative to the box scale.
  double min_separation = 0.05;
  double max_failure_rate = 0.01;
  std::uint64_t seed = 1;
};

/// Tests whether the level sets of s_y(., y) are independent of y: points on a
/// common level of s_y(., y0) (y0 the middle of Y) must stay on a common level
/// at other y. The tolerance at y1 is the matching tolerance scaled by the
/// largest sampled ratio |grad_x s_y(., y1)| / |grad_x s_y(., y0)|, times four.
/// Throws InsufficientPairs below 100 matched pairs.
IndexDetection detect_index_form(const Model& model, const DetectionSettings& settings = {});

/// s(x, y) = alpha(x) + sigma(I(x), y).
struct IndexForm {
  std::function<double(PointRef)> index;
  /// Central differences of `index` when empty.
  std::function<Vector(PointRef)> index_gradient;
  std::function<double(PointRef)> alpha;
  /// +1 supermodular, -1 submodular, 0 to determine from samples.
  int modularity_sign = 0;

  /// I = s_y(., y0): the index implied by a positive detection.
  static IndexForm from_level_field(const Model& model, double y0);
};

/// Monotone rearrangement of I#mu onto nu.
class Rearrangement1D {
 public:
  int modularity_sign() const { return sign_; }
  double t_lo() const { return t_.front(); }
  double t_hi() const { return t_.back(); }
  const std::vector<double>& nodes() const { return t_; }
  const std::vector<double>& cdf_values() const { return cdf_; }

  /// CDF of I#mu, PCHIP through the table.
  double source_cdf(double t) const;
  /// Density of I#mu: derivative of the CDF interpolant.
  double source_density(double t) const;
  /// F_1(t) = G^{-1}(CDF(t)), or G^{-1}(1 - CDF(t)) for a submodular sign.
  double map(double t) const;
  double map_x(PointRef x) const { return map(index_(x)); }
  double g(double y) const { return model_->g(y); }

 private:
  friend Rearrangement1D reduce_and_solve_1d(const Model&, const IndexForm&, int);
  const Model* model_ = nullptr;
  std::function<double(PointRef)> index_;
  int sign_ = 1;
  std::vector<double> t_;
  std::vector<double> cdf_;
  std::shared_ptr<const std::function<double(double)>> cdf_fn_;
  std::shared_ptr<const std::function<double(double)>> pdf_fn_;
};

/// Builds the CDF of I#mu on `resolution` levels with the cell-fraction kernel
/// (linearised I over each quadrature cell), determines the modularity sign
/// from differences of s_y along a representative curve x(I), and composes
/// with the target quantile. Throws NonMonotoneSign on a mixed sign.
Rearrangement1D reduce_and_solve_1d(const Model& model, const IndexForm& form, int resolution = 2049);

struct OdeCheck {
  double max_residual = 0.0;
  double sup_density = 0.0;
  double relative() const { return sup_density > 0.0 ? max_residual / sup_density : max_residual; }
};

/// max over probes of |f_1(t) - F_1'(t) g(F_1(t))|, F_1' by central differences.
OdeCheck verify_1d_ode(const Rearrangement1D& rearr, std::span<const double> probes);

/// `count` probes evenly spaced between the q and 1 - q quantiles of I#mu.
std::vector<double> ode_probes(const Rearrangement1D& rearr, int count, double q = 0.05);

}  // namespace nestor
