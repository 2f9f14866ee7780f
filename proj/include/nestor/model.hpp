#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nestor/domain.hpp"
#include "nestor/quadrature.hpp"
#include "nestor/surplus.hpp"
#include "nestor/types.hpp"

namespace nestor {

/// Open target interval Y = (lo, hi).
struct TargetInterval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains_closed(double y) const { return y >= lo && y <= hi; }
};

/// Cumulative distribution of a target density on Y, normalised to G(hi) = 1.
///
/// The CDF is integrated adaptively on a uniform 2049-node cache and
/// interpolated with cubic Hermite pieces whose slopes are the density itself.
class TargetCdf {
 public:
  TargetCdf(std::function<double(double)> g, TargetInterval target);

  double operator()(double y) const;
  double quantile(double p) const;
  /// Integral of the raw density over Y before normalisation.
  double raw_mass() const { return raw_mass_; }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  TargetInterval target_;
  double raw_mass_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::function<double(double)> spline_;
};

struct LogBounds {
  double log_f_min = 0.0;
  double log_f_max = 0.0;
  double log_g_min = 0.0;
  double log_g_max = 0.0;
};

/// A complete transport problem: X, Y, surplus, both densities and the
/// quadrature used for every integral over X. Immutable after construction;
/// densities are normalised with that same quadrature.
class Model {
 public:
  using SourceDensity = std::function<double(PointRef)>;
  using TargetDensity = std::function<double(double)>;

  Model(Domain domain, TargetInterval target, SurplusPtr surplus, SourceDensity f, TargetDensity g,
        QuadratureSettings quad);

  int dim() const { return domain_.dim; }
  const Domain& domain() const { return domain_; }
  const TargetInterval& target() const { return target_; }
  const Surplus& surplus() const { return *surplus_; }
  const SurplusPtr& surplus_ptr() const { return surplus_; }
  const Quadrature& quadrature() const { return quad_; }

  /// Normalised source density.
  double f(PointRef x) const { return f_raw_(x) / f_mass_; }
  /// Normalised target density.
  double g(double y) const { return g_raw_(y) / cdf_.raw_mass(); }
  double target_cdf(double y) const { return cdf_(y); }
  double target_quantile(double p) const { return cdf_.quantile(p); }

  /// f at each quadrature point.
  const Array& density_at_points() const { return f_at_points_; }
  /// weight * f at each quadrature point; sums to one.
  const Array& mass_weights() const { return mass_weights_; }
  const LogBounds& log_bounds() const { return log_bounds_; }
  /// max |s(x, y)| over sampled (x, y); used to scale absolute tolerances.
  double surplus_scale() const { return surplus_scale_; }

 private:
  Domain domain_;
  TargetInterval target_;
  SurplusPtr surplus_;
  SourceDensity f_raw_;
  TargetDensity g_raw_;
  Quadrature quad_;
  TargetCdf cdf_;
  double f_mass_ = 1.0;
  Array f_at_points_;
  Array mass_weights_;
  LogBounds log_bounds_;
  double surplus_scale_ = 1.0;
};

struct NondegeneracyCertificate {
  double min_grad_norm = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::optional<std::pair<Vector, double>> witness;  // minimising (x, y) on failure
};

/// Minimum of |grad_x s_y| over quadrature points x 17 interior y samples,
/// refined by Newton steps on grad_x s_y = 0 from the smallest samples.
/// Default threshold is 1e-8 times the box diagonal.
NondegeneracyCertificate certify_nondegeneracy(const Model& model, std::optional<double> threshold = {});

/// G(y) = integral of g from y_lo to y. Throws OutOfRange outside [y_lo, y_hi].
double target_cdf(const Model& model, double y);

/// mu-mass of the quadrature points satisfying `predicate`.
double region_mass(const Model& model, const std::function<bool(PointRef)>& predicate);

}  // namespace nestor
