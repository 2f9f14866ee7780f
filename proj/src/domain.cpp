#include "nestor/domain.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "nestor/error.hpp"

namespace nestor {

bool Domain::in_box(PointRef x) const {
  for (int j = 0; j < dim; ++j) {
    if (!(x[j] > lo[j] && x[j] < hi[j])) return false;
  }
  return true;
}

double Domain::box_scale() const { return (hi - lo).norm(); }

double Domain::box_volume() const { return (hi - lo).prod(); }

void Domain::validate() const {
  if (dim <= 0) throw Error(ErrorKind::InvalidArgument, "domain dimension must be positive");
  if (lo.size() != dim || hi.size() != dim) {
    throw Error(ErrorKind::InvalidArgument, "bounding box corners do not match the dimension");
  }
  if (((hi - lo).array() <= 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "bounding box must have positive extent in every coordinate");
  }
  if (!inside) throw Error(ErrorKind::InvalidArgument, "domain has no inside predicate");
}

namespace {

// Unit ball volume in R^m.
double ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

Vector unit(Vector v) {
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

}  // namespace

Domain make_box(const Vector& lo, const Vector& hi) {
  Domain d;
  d.dim = static_cast<int>(lo.size());
  d.lo = lo;
  d.hi = hi;
  d.name = "box";
  d.volume_hint = (hi - lo).prod();
  d.inside = [lo, hi](PointRef x) {
    return ((x.array() > lo.array()) && (x.array() < hi.array())).all();
  };
  d.boundary_normal = [lo, hi](PointRef x) {
    const int m = static_cast<int>(x.size());
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    double sign = 1.0;
    for (int j = 0; j < m; ++j) {
      if (x[j] - lo[j] < best_dist) { best_dist = x[j] - lo[j]; best = j; sign = -1.0; }
      if (hi[j] - x[j] < best_dist) { best_dist = hi[j] - x[j]; best = j; sign = 1.0; }
    }
    Vector n = Vector::Zero(m);
    n[best] = sign;
    return n;
  };
  d.validate();
  return d;
}

Domain make_interval(double a, double b) {
  Domain d = make_box(Vector::Constant(1, a), Vector::Constant(1, b));
  d.name = "interval";
  return d;
}

Domain make_paraboloid(int m, double flatness, double height) {
  if (m < 2) throw Error(ErrorKind::InvalidArgument, "paraboloid needs m >= 2");
  if (flatness < 1.0) throw Error(ErrorKind::InvalidArgument, "flatness must be >= 1");
  if (height <= 0.0) throw Error(ErrorKind::InvalidArgument, "height must be positive");
  const double radius = std::pow(2.0 * height, 1.0 / (2.0 * flatness));
  Domain d;
  d.dim = m;
  d.lo = Vector::Constant(m, -radius);
  d.hi = Vector::Constant(m, radius);
  d.lo[0] = 0.0;
  d.hi[0] = height;
  d.name = "paraboloid";
  const Vector lo = d.lo;
  const Vector hi = d.hi;
  // Sublevel {phi < 0} with phi = (1/2) rho^(2 kappa) - x_1, rho^2 = sum_{i>=2} x_i^2.
  d.inside = [=](PointRef x) {
    if (!((x.array() > lo.array()) && (x.array() < hi.array())).all()) return false;
    const double rho2 = x.tail(m - 1).squaredNorm();
    return 0.5 * std::pow(rho2, flatness) < x[0];
  };
  d.boundary_normal = [=](PointRef x) {
    const double rho2 = x.tail(m - 1).squaredNorm();
    Vector grad(m);
    grad[0] = -1.0;
    const double c = rho2 > 0.0 ? flatness * std::pow(rho2, flatness - 1.0) : (flatness == 1.0 ? 1.0 : 0.0);
    grad.tail(m - 1) = c * x.tail(m - 1);
    const double phi = 0.5 * std::pow(rho2, flatness) - x[0];
    const double dist_side = std::abs(phi) / grad.norm();
    const double dist_cap = std::abs(height - x[0]);
    if (dist_cap < dist_side) {
      Vector n = Vector::Zero(m);
      n[0] = 1.0;
      return n;
    }
    return unit(grad);
  };
  // Cross-section at x_1 = t is a ball of radius (2t)^(1/(2 kappa)) in R^(m-1).
  const double p = 1.0 + (m - 1) / (2.0 * flatness);
  d.volume_hint = ball_volume(m - 1) * std::pow(2.0, (m - 1) / (2.0 * flatness)) * std::pow(height, p) / p;
  d.validate();
  return d;
}

Domain make_shell(int m, double r_inner, double r_outer) {
  if (m < 2) throw Error(ErrorKind::InvalidArgument, "shell needs m >= 2");
  if (r_inner < 0.0 || r_inner >= r_outer) throw Error(ErrorKind::InvalidArgument, "shell radii must satisfy 0 <= r < R");
  Domain d;
  d.dim = m;
  d.lo = Vector::Constant(m, -r_outer);
  d.hi = Vector::Constant(m, r_outer);
  d.name = r_inner > 0.0 ? "shell" : "punctured-ball";
  d.inside = [=](PointRef x) {
    const double r = x.norm();
    return r > r_inner && r < r_outer;
  };
  d.boundary_normal = [=](PointRef x) {
    const double r = x.norm();
    Vector n = x / r;
    if (r_inner > 0.0 && r - r_inner < r_outer - r) n = -n;
    return n;
  };
  d.volume_hint = ball_volume(m) * (std::pow(r_outer, m) - std::pow(r_inner, m));
  d.validate();
  return d;
}

Domain make_pie(double theta0, double radius) {
  if (!(theta0 > 0.0 && theta0 < std::numbers::pi)) {
    throw Error(ErrorKind::InvalidArgument, "pie opening angle must lie in (0, pi)");
  }
  if (radius <= 0.0) throw Error(ErrorKind::InvalidArgument, "pie radius must be positive");
  Domain d;
  d.dim = 2;
  const double x1_min = std::min(0.0, radius * std::cos(theta0));
  const double x2_max = theta0 >= 0.5 * std::numbers::pi ? radius : radius * std::sin(theta0);
  d.lo = Vector{{x1_min, -x2_max}};
  d.hi = Vector{{radius, x2_max}};
  d.name = "pie";
  d.inside = [=](PointRef x) {
    const double r = x.norm();
    return r > 0.0 && r < radius && std::abs(std::atan2(x[1], x[0])) < theta0;
  };
  d.boundary_normal = [=](PointRef x) {
    const double r = x.norm();
    double best = radius - r;
    Vector n = x / std::max(r, 1e-300);
    // Edge rays at angles +theta0 and -theta0 with outward normals.
    const Vector dirs[2] = {Vector{{std::cos(theta0), std::sin(theta0)}}, Vector{{std::cos(theta0), -std::sin(theta0)}}};
    const Vector outs[2] = {Vector{{-std::sin(theta0), std::cos(theta0)}}, Vector{{-std::sin(theta0), -std::cos(theta0)}}};
    for (int e = 0; e < 2; ++e) {
      const double along = x.dot(dirs[e]);
      const double dist = along > 0.0 ? std::abs(x.dot(outs[e])) : r;
      if (dist < best) {
        best = dist;
        n = outs[e];
      }
    }
    return n;
  };
  d.volume_hint = theta0 * radius * radius;
  d.validate();
  return d;
}

}  // namespace nestor
