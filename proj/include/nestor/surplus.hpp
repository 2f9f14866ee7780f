#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nestor/types.hpp"

namespace nestor {

struct Domain;
struct TargetInterval;

/// Surplus s(x, y) on X x Y, X in R^m, Y in R, with the derivatives the
/// level-set machinery needs: s_y, grad_x s_y and s_yy.
class Surplus {
 public:
  virtual ~Surplus() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual double value(PointRef x, double y) const = 0;
  virtual double dy(PointRef x, double y) const = 0;
  virtual void grad_x_dy(PointRef x, double y, VectorOut out) const = 0;
  virtual double dyy(PointRef x, double y) const = 0;
  /// Declared smoothness class r (trusted, not verified).
  virtual int smoothness_class() const { return 2; }

  Vector grad_x_dy(PointRef x, double y) const {
    Vector g(dim());
    grad_x_dy(x, y, g);
    return g;
  }
};

using SurplusPtr = std::shared_ptr<const Surplus>;

/// s(x, y) = y * x_1: bilinear surplus with targets on a segment of the x_1 axis.
class SegmentSurplus final : public Surplus {
 public:
  explicit SegmentSurplus(int m) : m_(m) {}
  int dim() const override { return m_; }
  std::string name() const override { return "bilinear-segment"; }
  double value(PointRef x, double y) const override { return y * x[0]; }
  double dy(PointRef x, double) const override { return x[0]; }
  void grad_x_dy(PointRef, double, VectorOut out) const override {
    out.setZero();
    out[0] = 1.0;
  }
  double dyy(PointRef, double) const override { return 0.0; }
  int smoothness_class() const override { return 100; }

 private:
  int m_;
};

/// s(x, theta) = x_1 cos(theta) + x_2 sin(theta): bilinear surplus with targets
/// on a circular arc parameterised by angle.
class ArcSurplus final : public Surplus {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "bilinear-arc"; }
  double value(PointRef x, double t) const override;
  double dy(PointRef x, double t) const override;
  void grad_x_dy(PointRef x, double t, VectorOut out) const override;
  double dyy(PointRef x, double t) const override;
  int smoothness_class() const override { return 100; }
};

/// s(x, y) = y |x|^2. grad_x s_y = 2x vanishes at the origin.
class RadialSurplus final : public Surplus {
 public:
  explicit RadialSurplus(int m) : m_(m) {}
  int dim() const override { return m_; }
  std::string name() const override { return "radial"; }
  double value(PointRef x, double y) const override { return y * x.squaredNorm(); }
  double dy(PointRef x, double) const override { return x.squaredNorm(); }
  void grad_x_dy(PointRef x, double, VectorOut out) const override { out = 2.0 * x; }
  double dyy(PointRef, double) const override { return 0.0; }

 private:
  int m_;
};

/// Polynomial in (x_1..x_m, y) given by a coefficient table. Derivatives are
/// obtained by differentiating the monomials exactly.
class PolynomialSurplus final : public Surplus {
 public:
  struct Term {
    double coef = 0.0;
    std::vector<int> x_pow;  // length m
    int y_pow = 0;
  };

  PolynomialSurplus(int m, std::vector<Term> terms);

  int dim() const override { return m_; }
  std::string name() const override { return "polynomial"; }
  double value(PointRef x, double y) const override;
  double dy(PointRef x, double y) const override;
  void grad_x_dy(PointRef x, double y, VectorOut out) const override;
  double dyy(PointRef x, double y) const override;
  int smoothness_class() const override { return 100; }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  double monomial(const Term& t, PointRef x, double y, int dy_order, int dx_axis) const;

  int m_;
  std::vector<Term> terms_;
};

/// Polynomial p(x) in m variables; used for densities and index functions.
class Polynomial {
 public:
  struct Term {
    double coef = 0.0;
    std::vector<int> pow;
  };

  Polynomial() = default;
  Polynomial(int m, std::vector<Term> terms);

  int dim() const { return m_; }
  double operator()(PointRef x) const;
  Vector gradient(PointRef x) const;

 private:
  int m_ = 0;
  std::vector<Term> terms_;
};

/// Explicit pseudo-index surplus s(x, y) = sigma(I(x), y) + alpha(x).
///
/// Only the derivatives in y of sigma and its mixed partial in (I, y) are
/// needed: s_y = sigma_y(I, y), grad_x s_y = sigma_Iy(I, y) grad I.
struct IndexSurplusParts {
  int dim = 0;
  std::function<double(PointRef)> index;
  std::function<Vector(PointRef)> index_gradient;
  std::function<double(PointRef)> alpha;
  std::function<double(double, double)> sigma;
  std::function<double(double, double)> sigma_y;
  std::function<double(double, double)> sigma_yy;
  std::function<double(double, double)> sigma_ty;
};

class IndexSurplus final : public Surplus {
 public:
  explicit IndexSurplus(IndexSurplusParts parts);

  int dim() const override { return parts_.dim; }
  std::string name() const override { return "pseudo-index"; }
  double value(PointRef x, double y) const override;
  double dy(PointRef x, double y) const override;
  void grad_x_dy(PointRef x, double y, VectorOut out) const override;
  double dyy(PointRef x, double y) const override;

  const IndexSurplusParts& parts() const { return parts_; }

 private:
  IndexSurplusParts parts_;
};

/// Largest relative discrepancy between the analytic derivatives of `s` and
/// central differences (step 1e-5 of the box scale) over random probes in the
/// domain box times Y.
double surplus_consistency_error(const Surplus& s, const Domain& dom, const TargetInterval& target,
                                 int probes, std::uint64_t seed);

}  // namespace nestor
