#include "nestor/pseudo_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "nestor/cell_kernel.hpp"
#include "nestor/error.hpp"

namespace nestor {

namespace {

Vector fd_gradient(const std::function<double(PointRef)>& f, PointRef x, double step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double keep = xp[j];
    xp[j] = keep + step;
    const double fp = f(xp);
    xp[j] = keep - step;
    const double fm = f(xp);
    xp[j] = keep;
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace

IndexDetection detect_index_form(const Model& model, const DetectionSettings& settings) {
  const auto& quad = model.quadrature();
  const Surplus& s = model.surplus();
  const TargetInterval& target = model.target();
  const double y0 = target.mid();

  std::mt19937_64 rng(settings.seed);
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(quad.size()));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  if (static_cast<int>(ids.size()) > settings.sample_points) {
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(settings.sample_points));
  }
  const std::size_t n = ids.size();
  std::vector<double> v0(n);
  std::vector<double> g0(n);
  Vector grad(model.dim());
  for (std::size_t q = 0; q < n; ++q) {
    v0[q] = s.dy(quad.point(ids[q]), y0);
    s.grad_x_dy(quad.point(ids[q]), y0, grad);
    g0[q] = grad.norm();
  }
  const auto [mn, mx] = std::minmax_element(v0.begin(), v0.end());
  const double range0 = std::max(*mx - *mn, 1e-300);
  const double tol0 = settings.match_tol * range0;
  const double dmin = settings.min_separation * model.domain().box_scale();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v0[a] < v0[b]; });

  // Matched pairs: close in level at y0, far apart in X.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < n && static_cast<int>(pairs.size()) < settings.max_pairs; a += 3) {
    const std::size_t ia = order[a];
    for (std::size_t b = a + 1; b < n && v0[order[b]] - v0[ia] <= tol0; ++b) {
      const std::size_t ib = order[b];
      if ((quad.point(ids[ia]) - quad.point(ids[ib])).norm() >= dmin) {
        pairs.emplace_back(ia, ib);
        break;
      }
    }
  }
  IndexDetection out;
  out.matched_pairs = static_cast<int>(pairs.size());
  if (pairs.size() < 100) {
    throw Error(ErrorKind::InsufficientPairs,
                "only " + std::to_string(pairs.size()) + " matched pairs found on a common level set");
  }

  int failures = 0;
  for (int t = 0; t < settings.y_tests; ++t) {
    const double y1 = target.lo + target.width() * (t + 0.5) / settings.y_tests;
    if (y1 == y0) continue;
    // Calibrate: level gaps scale with the gradient ratio between y1 and y0.
    double ratio = 0.0;
    std::vector<double> v1(n);
    for (std::size_t q = 0; q < n; ++q) {
      v1[q] = s.dy(quad.point(ids[q]), y1);
      s.grad_x_dy(quad.point(ids[q]), y1, grad);
      if (g0[q] > 0.0) ratio = std::max(ratio, grad.norm() / g0[q]);
    }
    const double tol1 = 4.0 * ratio * tol0 + 1e-12 * range0;
    for (const auto& [a, b] : pairs) {
      ++out.tests;
      const double gap1 = std::abs(v1[a] - v1[b]);
      if (gap1 > tol1) {
        ++failures;
        if (out.witnesses.size() < 20) {
          out.witnesses.push_back({Vector(quad.point(ids[a])), Vector(quad.point(ids[b])), y0, y1,
                                   std::abs(v0[a] - v0[b]), gap1});
        }
      }
    }
  }
  out.failure_rate = out.tests > 0 ? static_cast<double>(failures) / out.tests : 1.0;
  out.confidence = 1.0 - out.failure_rate;
  out.is_index = out.tests > 0 && out.failure_rate < settings.max_failure_rate;
  return out;
}

IndexForm IndexForm::from_level_field(const Model& model, double y0) {
  IndexForm f;
  const SurplusPtr s = model.surplus_ptr();
  f.index = [s, y0](PointRef x) { return s->dy(x, y0); };
  f.index_gradient = [s, y0](PointRef x) { return s->grad_x_dy(x, y0); };
  return f;
}

double Rearrangement1D::source_cdf(double t) const {
  if (t <= t_.front()) return 0.0;
  if (t >= t_.back()) return 1.0;
  return std::clamp((*cdf_fn_)(t), 0.0, 1.0);
}

double Rearrangement1D::source_density(double t) const {
  if (t < t_.front() || t > t_.back()) return 0.0;
  return std::max(0.0, (*pdf_fn_)(t));
}

double Rearrangement1D::map(double t) const {
  const double p = source_cdf(t);
  return model_->target_quantile(sign_ > 0 ? p : 1.0 - p);
}

Rearrangement1D reduce_and_solve_1d(const Model& model, const IndexForm& form, int resolution) {
  if (!form.index) throw Error(ErrorKind::InvalidArgument, "index form has no index function");
  if (resolution < 4) throw Error(ErrorKind::InvalidArgument, "reduction needs at least four levels");
  const auto& quad = model.quadrature();
  const Array& mw = model.mass_weights();
  const Eigen::Index n = quad.size();
  const double step = 1e-6 * model.domain().box_scale();

  std::vector<double> idx(static_cast<std::size_t>(n));
  std::vector<CellSpread> spread(static_cast<std::size_t>(n));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const auto x = quad.point(i);
    idx[u] = form.index(x);
    const Vector g = form.index_gradient ? form.index_gradient(x) : fd_gradient(form.index, x, step);
    spread[u] = make_cell_spread(g, quad.spacing());
    lo = std::min(lo, idx[u] - spread[u].half);
    hi = std::max(hi, idx[u] + spread[u].half);
  }

  Rearrangement1D r;
  r.model_ = &model;
  r.index_ = form.index;
  r.t_.resize(static_cast<std::size_t>(resolution));
  r.cdf_.assign(static_cast<std::size_t>(resolution), 0.0);
  for (int j = 0; j < resolution; ++j) {
    const double t = lo + (hi - lo) * j / (resolution - 1);
    r.t_[static_cast<std::size_t>(j)] = t;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double d = t - idx[u];
      if (d >= spread[u].half) sum += mw[i];
      else if (d > -spread[u].half) sum += mw[i] * cell_fraction_below(d, spread[u]);
      else if (spread[u].count == 0 && d >= 0.0) sum += mw[i];
    }
    r.cdf_[static_cast<std::size_t>(j)] = sum;
  }
  r.cdf_.front() = 0.0;
  r.cdf_.back() = 1.0;

  // Modularity sign from d/dI of s_y along representatives x(I).
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
  constexpr int kReps = 65;
  std::vector<std::size_t> reps;
  for (int q = 0; q < kReps; ++q) {
    const std::size_t pos = (static_cast<std::size_t>(q) * (order.size() - 1)) / (kReps - 1);
    if (reps.empty() || idx[order[pos]] > idx[reps.back()]) reps.push_back(order[pos]);
  }
  const Surplus& s = model.surplus();
  const TargetInterval& target = model.target();
  double pos = 0.0;
  double neg = 0.0;
  for (int t = 0; t < 9; ++t) {
    const double y = target.lo + target.width() * (t + 0.5) / 9.0;
    for (std::size_t q = 1; q < reps.size(); ++q) {
      const auto a = static_cast<Eigen::Index>(reps[q - 1]);
      const auto b = static_cast<Eigen::Index>(reps[q]);
      const double d = (s.dy(quad.point(b), y) - s.dy(quad.point(a), y)) / (idx[reps[q]] - idx[reps[q - 1]]);
      pos = std::max(pos, d);
      neg = std::min(neg, d);
    }
  }
  const double noise = 1e-6 * std::max(pos, -neg);
  if (pos > noise && neg < -noise) {
    throw Error(ErrorKind::NonMonotoneSign, "mixed partial of sigma changes sign on the samples");
  }
  const int sampled = pos > noise ? 1 : -1;
  if (form.modularity_sign != 0 && form.modularity_sign != sampled) {
    throw Error(ErrorKind::NonMonotoneSign, "declared modularity sign disagrees with the samples");
  }
  r.sign_ = sampled;

  auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
      std::vector<double>(r.t_), std::vector<double>(r.cdf_));
  r.cdf_fn_ = std::make_shared<const std::function<double(double)>>([spline](double t) { return (*spline)(t); });
  r.pdf_fn_ =
      std::make_shared<const std::function<double(double)>>([spline](double t) { return spline->prime(t); });
  return r;
}

OdeCheck verify_1d_ode(const Rearrangement1D& rearr, std::span<const double> probes) {
  OdeCheck out;
  const auto& t = rearr.nodes();
  const double h = 0.5 * (rearr.t_hi() - rearr.t_lo()) / static_cast<double>(t.size() - 1);
  for (const double tn : t) out.sup_density = std::max(out.sup_density, rearr.source_density(tn));
  for (const double p : probes) {
    const double dF = (rearr.map(p + h) - rearr.map(p - h)) / (2.0 * h);
    const double res = std::abs(rearr.source_density(p) - std::abs(dF) * rearr.g(rearr.map(p)));
    out.max_residual = std::max(out.max_residual, res);
  }
  return out;
}

std::vector<double> ode_probes(const Rearrangement1D& rearr, int count, double q) {
  std::vector<double> out;
  const auto at_mass = [&](double p) {
    double a = rearr.t_lo();
    double b = rearr.t_hi();
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (a + b);
      if (rearr.source_cdf(mid) < p) a = mid; else b = mid;
    }
    return 0.5 * (a + b);
  };
  const double a = at_mass(q);
  const double b = at_mass(1.0 - q);
  for (int j = 0; j < count; ++j) out.push_back(count == 1 ? 0.5 * (a + b) : a + (b - a) * j / (count - 1));
  return out;
}

}  // namespace nestor
