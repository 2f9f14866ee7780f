#include "nestor/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nestor/error.hpp"

namespace nestor {

namespace {
constexpr int kCdfCells = 2048;
}

TargetCdf::TargetCdf(std::function<double(double)> g, TargetInterval target) : target_(target) {
  if (!(target.lo < target.hi)) throw Error(ErrorKind::InvalidArgument, "target interval requires lo < hi");
  const double h = target.width() / kCdfCells;
  nodes_.resize(kCdfCells + 1);
  values_.resize(kCdfCells + 1);
  std::vector<double> slopes(kCdfCells + 1);
  double acc = 0.0;
  nodes_[0] = target.lo;
  values_[0] = 0.0;
  for (int i = 0; i < kCdfCells; ++i) {
    const double a = target.lo + i * h;
    const double b = i + 1 == kCdfCells ? target.hi : target.lo + (i + 1) * h;
    acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 10, 1e-14);
    nodes_[static_cast<std::size_t>(i + 1)] = b;
    values_[static_cast<std::size_t>(i + 1)] = acc;
  }
  if (!(acc > 0.0) || !std::isfinite(acc)) {
    throw Error(ErrorKind::InvalidArgument, "target density must have positive finite mass");
  }
  raw_mass_ = acc;
  for (auto& v : values_) v /= acc;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double gi = g(nodes_[i]);
    slopes[i] = std::isfinite(gi) ? gi / acc : 0.0;
  }
  // Endpoint slopes may be undefined for densities singular at the ends; fall
  // back to one-sided secants.
  if (!std::isfinite(slopes.front())) slopes.front() = (values_[1] - values_[0]) / h;
  if (!std::isfinite(slopes.back())) slopes.back() = (values_.back() - values_[values_.size() - 2]) / h;
  using Spline = boost::math::interpolators::cubic_hermite<std::vector<double>>;
  auto spline = std::make_shared<Spline>(std::vector<double>(nodes_), std::vector<double>(values_), std::move(slopes));
  spline_ = [spline](double y) { return (*spline)(y); };
}

double TargetCdf::operator()(double y) const {
  const double slack = 1e-12 * target_.width();
  if (!(y >= target_.lo - slack && y <= target_.hi + slack)) {
    throw Error(ErrorKind::OutOfRange, "target_cdf evaluated outside the target interval");
  }
  if (y <= target_.lo) return 0.0;
  if (y >= target_.hi) return 1.0;
  return std::clamp(spline_(y), 0.0, 1.0);
}

double TargetCdf::quantile(double p) const {
  if (p <= 0.0) return target_.lo;
  if (p >= 1.0) return target_.hi;
  const auto it = std::lower_bound(values_.begin(), values_.end(), p);
  const std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - values_.begin()));
  double a = nodes_[j - 1];
  double b = nodes_[std::min(j, nodes_.size() - 1)];
  for (int it2 = 0; it2 < 60 && b - a > 1e-15 * target_.width(); ++it2) {
    const double c = 0.5 * (a + b);
    if ((*this)(c) < p) a = c; else b = c;
  }
  return 0.5 * (a + b);
}

Model::Model(Domain domain, TargetInterval target, SurplusPtr surplus, SourceDensity f, TargetDensity g,
             QuadratureSettings quad)
    : domain_(std::move(domain)),
      target_(target),
      surplus_(std::move(surplus)),
      f_raw_(std::move(f)),
      g_raw_(std::move(g)),
      quad_(Quadrature::build(domain_, quad)),
      cdf_(g_raw_, target_) {
  if (!surplus_) throw Error(ErrorKind::InvalidArgument, "model requires a surplus");
  if (surplus_->dim() != domain_.dim) throw Error(ErrorKind::InvalidArgument, "surplus and domain dimensions differ");

  const Eigen::Index n = quad_.size();
  f_at_points_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fi = f_raw_(quad_.point(i));
    if (!(fi > 0.0) || !std::isfinite(fi)) {
      throw Error(ErrorKind::InvalidArgument, "source density must be strictly positive and finite on the domain");
    }
    f_at_points_[i] = fi;
  }
  f_mass_ = (quad_.weights() * f_at_points_).sum();
  f_at_points_ /= f_mass_;
  mass_weights_ = quad_.weights() * f_at_points_;

  log_bounds_.log_f_min = std::log(f_at_points_.minCoeff());
  log_bounds_.log_f_max = std::log(f_at_points_.maxCoeff());
  double gmin = std::numeric_limits<double>::infinity();
  double gmax = 0.0;
  const auto& nodes = cdf_.nodes();
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    const double gi = this->g(nodes[i]);
    if (!(gi > 0.0) || !std::isfinite(gi)) {
      throw Error(ErrorKind::InvalidArgument, "target density must be strictly positive inside the target interval");
    }
    gmin = std::min(gmin, gi);
    gmax = std::max(gmax, gi);
  }
  log_bounds_.log_g_min = std::log(gmin);
  log_bounds_.log_g_max = std::log(gmax);

  // Scale of |s| over a strided subsample of points and 17 target values.
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / 4096);
  double scale = 0.0;
  for (int a = 0; a <= 16; ++a) {
    const double y = target_.lo + target_.width() * a / 16.0;
    for (Eigen::Index i = 0; i < n; i += stride) scale = std::max(scale, std::abs(surplus_->value(quad_.point(i), y)));
  }
  surplus_scale_ = scale > 0.0 ? scale : 1.0;
}

namespace {

// Newton iteration on grad_x s_y(x, y) = 0 with a central-difference Jacobian.
Vector refine_critical_point(const Surplus& s, Vector x, double y, double h) {
  const int m = static_cast<int>(x.size());
  Matrix jac(m, m);
  for (int it = 0; it < 30; ++it) {
    const Vector g = s.grad_x_dy(x, y);
    if (g.norm() < 1e-14) break;
    for (int j = 0; j < m; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      jac.col(j) = (s.grad_x_dy(xp, y) - s.grad_x_dy(xm, y)) / (2.0 * h);
    }
    const Vector step = jac.colPivHouseholderQr().solve(g);
    if (!step.allFinite()) break;
    x -= step;
  }
  return x;
}

}  // namespace

NondegeneracyCertificate certify_nondegeneracy(const Model& model, std::optional<double> threshold) {
  const auto& quad = model.quadrature();
  const auto& s = model.surplus();
  const auto& Y = model.target();
  if (quad.size() == 0) throw Error(ErrorKind::EmptyDomain, "no interior quadrature points");

  NondegeneracyCertificate cert;
  cert.threshold = threshold.value_or(1e-8 * model.domain().box_scale());

  struct Sample {
    double norm;
    Eigen::Index index;
    double y;
  };
  std::vector<Sample> best;
  constexpr std::size_t kKeep = 4;
  Vector g(model.dim());
  for (int a = 1; a <= 17; ++a) {
    const double y = Y.lo + Y.width() * a / 18.0;
    for (Eigen::Index i = 0; i < quad.size(); ++i) {
      s.grad_x_dy(quad.point(i), y, g);
      const double nrm = g.norm();
      if (best.size() < kKeep || nrm < best.back().norm) {
        best.push_back({nrm, i, y});
        std::sort(best.begin(), best.end(), [](const Sample& l, const Sample& r) { return l.norm < r.norm; });
        if (best.size() > kKeep) best.pop_back();
      }
    }
  }

  cert.min_grad_norm = best.front().norm;
  Vector arg_x = quad.point(best.front().index);
  double arg_y = best.front().y;
  const double h = 1e-4 * quad.spacing().minCoeff();
  for (const auto& b : best) {
    const Vector x = refine_critical_point(s, quad.point(b.index), b.y, h);
    if (!x.allFinite() || !model.domain().inside(x)) continue;
    const double nrm = s.grad_x_dy(x, b.y).norm();
    if (nrm < cert.min_grad_norm) {
      cert.min_grad_norm = nrm;
      arg_x = x;
      arg_y = b.y;
    }
  }
  cert.passed = cert.min_grad_norm > cert.threshold;
  if (!cert.passed) cert.witness = std::make_pair(arg_x, arg_y);
  return cert;
}

double target_cdf(const Model& model, double y) { return model.target_cdf(y); }

double region_mass(const Model& model, const std::function<bool(PointRef)>& predicate) {
  const auto& quad = model.quadrature();
  const auto& mw = model.mass_weights();
  double total = 0.0;
  for (Eigen::Index i = 0; i < quad.size(); ++i) {
    if (predicate(quad.point(i))) total += mw[i];
  }
  return total;
}

}  // namespace nestor
