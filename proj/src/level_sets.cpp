#include "nestor/level_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nestor/contour2d.hpp"
#include "nestor/error.hpp"

namespace nestor {

std::string to_string(Estimator e) { return e == Estimator::Band ? "band" : "contour2d"; }

Estimator estimator_from_string(const std::string& s) {
  if (s == "band") return Estimator::Band;
  if (s == "contour2d") return Estimator::Contour2d;
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + s + "'");
}

LevelField::LevelField(const Model& model, double y) : model_(&model), y_(y) {
  const auto& quad = model.quadrature();
  const auto& s = model.surplus();
  const Eigen::Index n = quad.size();
  const int m = model.dim();
  values_.resize(n);
  grad_norms_.resize(n);
  gradients_.resize(m, n);
  spreads_.resize(static_cast<std::size_t>(n));
  min_level_ = std::numeric_limits<double>::infinity();
  max_level_ = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = quad.point(i);
    values_[i] = s.dy(x, y);
    s.grad_x_dy(x, y, gradients_.col(i));
    grad_norms_[i] = gradients_.col(i).norm();
    const CellSpread c = make_cell_spread(gradients_.col(i), quad.spacing());
    spreads_[static_cast<std::size_t>(i)] = c;
    min_level_ = std::min(min_level_, values_[i] - c.half);
    max_level_ = std::max(max_level_, values_[i] + c.half);
  }
  max_grad_ = grad_norms_.maxCoeff();
}

double LevelField::sublevel_mass(double k) const {
  const Array& mw = model_->mass_weights();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const double t = k - values_[i];
    const CellSpread& c = spreads_[static_cast<std::size_t>(i)];
    if (t >= c.half) {
      sum += mw[i];
    } else if (t > -c.half) {
      sum += mw[i] * cell_fraction_below(t, c);
    } else if (c.count == 0 && t >= 0.0) {
      sum += mw[i];
    }
  }
  return sum;
}

double LevelField::default_epsilon() const {
  const double eps = 2.0 * model_->quadrature().spacing().maxCoeff() * max_grad_;
  return eps > 0.0 ? eps : 1e-12;
}

double LevelField::default_epsilon(double k) const {
  const double room = 0.5 * std::min(k - min_level_, max_level_ - k);
  const double base = default_epsilon();
  return room > 0.0 ? std::min(base, room) : base;
}

double sublevel_mass(const Model& model, double y, double k) { return LevelField(model, y).sublevel_mass(k); }

double split_function(const Model& model, double y, double k) {
  return sublevel_mass(model, y, k) - model.target_cdf(y);
}

SurfaceIntegralResult surface_integral(const Model& model, double y, double k,
                                       const std::function<double(PointRef)>& integrand, double epsilon,
                                       Estimator estimator) {
  SurfaceIntegralResult r;
  r.estimator = estimator;
  if (estimator == Estimator::Contour2d) {
    if (model.dim() != 2) throw Error(ErrorKind::InvalidArgument, "contour2d estimator requires m = 2");
    const Contour2d contour = extract_contour2d(model, y, k);
    r.band_count = static_cast<Eigen::Index>(contour.pieces.size());
    if (r.band_count == 0) throw Error(ErrorKind::EmptyBand, "level set does not meet the domain");
    r.value = contour_integral(contour, integrand);
    return r;
  }
  const LevelField field(model, y);
  r.epsilon = epsilon > 0.0 ? epsilon : field.default_epsilon(k);
  const auto& quad = model.quadrature();
  r.value = field.band_integral(
      k, r.epsilon, [&](Eigen::Index i) { return integrand(quad.point(i)); }, &r.band_count);
  if (r.band_count == 0) throw Error(ErrorKind::EmptyBand, "no quadrature points in the band around the level set");
  return r;
}

GradH grad_h(const LevelField& field, double k, double epsilon) {
  const Model& model = field.model();
  const auto& quad = model.quadrature();
  const auto& f = model.density_at_points();
  const auto& s = model.surplus();
  const Array& gn = field.grad_norms();
  const double y = field.y();
  Eigen::Index count = 0;
  const double hk = field.band_integral(k, epsilon, [&](Eigen::Index i) { return f[i] / gn[i]; }, &count);
  if (count == 0) throw Error(ErrorKind::EmptyBand, "no quadrature points in the band around the level set");
  const double flux =
      field.band_integral(k, epsilon, [&](Eigen::Index i) { return f[i] * s.dyy(quad.point(i), y) / gn[i]; });
  return GradH{-model.g(y) - flux, hk};
}

GradH grad_h(const Model& model, double y, double k, double epsilon) {
  const LevelField field(model, y);
  return grad_h(field, k, epsilon > 0.0 ? epsilon : field.default_epsilon(k));
}

double normal_velocity(const Model& model, double y, double /*k*/, double kprime, PointRef x) {
  const auto& s = model.surplus();
  const double gn = s.grad_x_dy(x, y).norm();
  if (gn < 1e-8 * model.domain().box_scale()) {
    throw Error(ErrorKind::Degenerate, "grad_x s_y vanishes at the probe point");
  }
  return (kprime - s.dyy(x, y)) / gn;
}

double transversality_at(const Model& model, double y, PointRef x) {
  const auto& dom = model.domain();
  if (!dom.has_boundary_oracle()) throw Error(ErrorKind::NoBoundaryOracle, "domain has no boundary normal oracle");
  const Vector n_x = dom.boundary_normal(x);
  const Vector g = model.surplus().grad_x_dy(x, y);
  const double gn = g.norm();
  if (gn <= 0.0) throw Error(ErrorKind::Degenerate, "grad_x s_y vanishes at the probe point");
  const double c = n_x.dot(g) / (gn * n_x.norm());
  return 1.0 - c * c;
}

TangentialCheck tangential_check(const LevelField& field, double k, double epsilon, double threshold) {
  TangentialCheck out;
  const Model& model = field.model();
  if (model.dim() == 1) return out;
  const auto& quad = model.quadrature();
  const auto& flags = quad.boundary_flags();
  const bool oracle = model.domain().has_boundary_oracle();
  Eigen::Index count = 0;
  const double area = field.band_integral(k, epsilon, [](Eigen::Index) { return 1.0; }, &count);
  if (count == 0 || area <= 0.0) return out;
  const double along = field.band_integral(k, epsilon, [&](Eigen::Index i) {
    if (!flags[static_cast<std::size_t>(i)]) return 0.0;
    if (!oracle) return 1.0;
    return transversality_at(model, field.y(), quad.point(i)) < 0.1 ? 1.0 : 0.0;
  });
  out.boundary_fraction = along / area;
  out.tangential = out.boundary_fraction > threshold;
  return out;
}

LevelSetSizes level_set_sizes(const Model& model, double y, double k, double epsilon, Estimator estimator) {
  LevelSetSizes out;
  if (estimator == Estimator::Contour2d) {
    if (model.dim() != 2) throw Error(ErrorKind::InvalidArgument, "contour2d estimator requires m = 2");
    const Contour2d contour = extract_contour2d(model, y, k);
    if (contour.pieces.empty()) throw Error(ErrorKind::EmptyBand, "level set does not meet the domain");
    out.area = contour.length;
    out.boundary = static_cast<double>(contour.boundary_endpoints);
    return out;
  }
  const LevelField field(model, y);
  const double eps = epsilon > 0.0 ? epsilon : field.default_epsilon(k);
  Eigen::Index count = 0;
  out.area = field.band_integral(k, eps, [](Eigen::Index) { return 1.0; }, &count);
  if (count == 0) throw Error(ErrorKind::EmptyBand, "no quadrature points in the band around the level set");
  if (model.dim() < 2 || !model.domain().has_boundary_oracle()) return out;
  if (model.dim() == 2) {
    out.boundary = static_cast<double>(extract_contour2d(model, y, k).boundary_endpoints);
    return out;
  }

  // Boundary-adjacent cells form a layer of thickness t = max_j h_j |n_j|; a
  // band of width 2 eps / |grad| crossing it at angle alpha covers a volume
  // B * t * (2 eps / |grad|) / sin(alpha).
  const auto& quad = model.quadrature();
  const auto& flags = quad.boundary_flags();
  const Vector& h = quad.spacing();
  const Array& gn = field.grad_norms();
  double b = 0.0;
  b = field.band_integral(k, eps, [&](Eigen::Index i) {
    if (!flags[static_cast<std::size_t>(i)]) return 0.0;
    const Vector n = model.domain().boundary_normal(quad.point(i));
    const double thickness = (h.array() * n.array().abs()).maxCoeff();
    const double c = n.dot(field.gradients().col(i)) / gn[i];
    const double sin_alpha = std::sqrt(std::max(0.0, 1.0 - c * c));
    return thickness > 0.0 ? sin_alpha / thickness : 0.0;
  });
  out.boundary = b;
  return out;
}

}  // namespace nestor
