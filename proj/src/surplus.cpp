#include "nestor/surplus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nestor/domain.hpp"
#include "nestor/error.hpp"
#include "nestor/model.hpp"

namespace nestor {

double ArcSurplus::value(PointRef x, double t) const { return x[0] * std::cos(t) + x[1] * std::sin(t); }

double ArcSurplus::dy(PointRef x, double t) const { return -x[0] * std::sin(t) + x[1] * std::cos(t); }

void ArcSurplus::grad_x_dy(PointRef, double t, VectorOut out) const {
  out[0] = -std::sin(t);
  out[1] = std::cos(t);
}

double ArcSurplus::dyy(PointRef x, double t) const { return -x[0] * std::cos(t) - x[1] * std::sin(t); }

namespace {

// d^n/dz^n z^p evaluated at z.
double power_derivative(double z, int p, int n) {
  if (n > p) return 0.0;
  double c = 1.0;
  for (int i = 0; i < n; ++i) c *= static_cast<double>(p - i);
  const int e = p - n;
  return e == 0 ? c : c * std::pow(z, e);
}

}  // namespace

PolynomialSurplus::PolynomialSurplus(int m, std::vector<Term> terms) : m_(m), terms_(std::move(terms)) {
  if (m <= 0) throw Error(ErrorKind::InvalidArgument, "polynomial surplus dimension must be positive");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.x_pow.size()) != m) {
      throw Error(ErrorKind::InvalidArgument, "polynomial term has wrong number of x exponents");
    }
    if (t.y_pow < 0 || std::any_of(t.x_pow.begin(), t.x_pow.end(), [](int p) { return p < 0; })) {
      throw Error(ErrorKind::InvalidArgument, "polynomial exponents must be non-negative");
    }
  }
}

double PolynomialSurplus::monomial(const Term& t, PointRef x, double y, int dy_order, int dx_axis) const {
  double v = t.coef * power_derivative(y, t.y_pow, dy_order);
  if (v == 0.0) return 0.0;
  for (int j = 0; j < m_; ++j) {
    v *= power_derivative(x[j], t.x_pow[j], j == dx_axis ? 1 : 0);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double PolynomialSurplus::value(PointRef x, double y) const {
  double s = 0.0;
  for (const auto& t : terms_) s += monomial(t, x, y, 0, -1);
  return s;
}

double PolynomialSurplus::dy(PointRef x, double y) const {
  double s = 0.0;
  for (const auto& t : terms_) s += monomial(t, x, y, 1, -1);
  return s;
}

void PolynomialSurplus::grad_x_dy(PointRef x, double y, VectorOut out) const {
  out.setZero();
  for (const auto& t : terms_) {
    for (int j = 0; j < m_; ++j) out[j] += monomial(t, x, y, 1, j);
  }
}

double PolynomialSurplus::dyy(PointRef x, double y) const {
  double s = 0.0;
  for (const auto& t : terms_) s += monomial(t, x, y, 2, -1);
  return s;
}

Polynomial::Polynomial(int m, std::vector<Term> terms) : m_(m), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.pow.size()) != m) {
      throw Error(ErrorKind::InvalidArgument, "polynomial term has wrong number of exponents");
    }
  }
}

double Polynomial::operator()(PointRef x) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (int j = 0; j < m_; ++j) v *= power_derivative(x[j], t.pow[j], 0);
    s += v;
  }
  return s;
}

Vector Polynomial::gradient(PointRef x) const {
  Vector g = Vector::Zero(m_);
  for (const auto& t : terms_) {
    for (int a = 0; a < m_; ++a) {
      double v = t.coef;
      for (int j = 0; j < m_ && v != 0.0; ++j) v *= power_derivative(x[j], t.pow[j], j == a ? 1 : 0);
      g[a] += v;
    }
  }
  return g;
}

IndexSurplus::IndexSurplus(IndexSurplusParts parts) : parts_(std::move(parts)) {
  if (!parts_.index || !parts_.index_gradient || !parts_.sigma || !parts_.sigma_y || !parts_.sigma_yy ||
      !parts_.sigma_ty) {
    throw Error(ErrorKind::InvalidArgument, "pseudo-index surplus is missing a component");
  }
}

double IndexSurplus::value(PointRef x, double y) const {
  const double a = parts_.alpha ? parts_.alpha(x) : 0.0;
  return parts_.sigma(parts_.index(x), y) + a;
}

double IndexSurplus::dy(PointRef x, double y) const { return parts_.sigma_y(parts_.index(x), y); }

void IndexSurplus::grad_x_dy(PointRef x, double y, VectorOut out) const {
  out = parts_.sigma_ty(parts_.index(x), y) * parts_.index_gradient(x);
}

double IndexSurplus::dyy(PointRef x, double y) const { return parts_.sigma_yy(parts_.index(x), y); }

double surplus_consistency_error(const Surplus& s, const Domain& dom, const TargetInterval& target, int probes,
                                 std::uint64_t seed) {
  const int m = s.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hx = 1e-5 * dom.box_scale();
  const double hy = 1e-5 * target.width();
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };

  double worst = 0.0;
  Vector x(m);
  Vector g(m);
  for (int p = 0; p < probes; ++p) {
    for (int j = 0; j < m; ++j) x[j] = dom.lo[j] + unit(rng) * (dom.hi[j] - dom.lo[j]);
    // Keep the y stencil inside the open interval.
    const double y = target.lo + (0.05 + 0.9 * unit(rng)) * target.width();

    const double fd_y = (s.value(x, y + hy) - s.value(x, y - hy)) / (2.0 * hy);
    worst = std::max(worst, rel(s.dy(x, y), fd_y));
    const double fd_yy = (s.dy(x, y + hy) - s.dy(x, y - hy)) / (2.0 * hy);
    worst = std::max(worst, rel(s.dyy(x, y), fd_yy));

    s.grad_x_dy(x, y, g);
    for (int j = 0; j < m; ++j) {
      Vector xp = x;
      Vector xm = x;
      xp[j] += hx;
      xm[j] -= hx;
      const double fd = (s.dy(xp, y) - s.dy(xm, y)) / (2.0 * hx);
      worst = std::max(worst, rel(g[j], fd));
    }
  }
  return worst;
}

}  // namespace nestor
