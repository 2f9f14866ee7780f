#include "nestor/nested_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

// Boost 1.74's pchip calls isnan unqualified on a plain double.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/minima.hpp>

#include "nestor/error.hpp"

namespace nestor {

namespace {

// Derivative at `at` of the quadratic through three points.
double quadratic_slope(double x0, double f0, double x1, double f1, double x2, double f2, double at) {
  const double l0 = ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2));
  const double l1 = ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2));
  const double l2 = ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
  return l0 * f0 + l1 * f1 + l2 * f2;
}

// Piecewise-linear interpolation clamped to the end values.
double linear_at(const std::vector<double>& xs, const std::vector<double>& fs, double x) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (x <= xs.front()) return fs.front();
  if (x >= xs.back()) return fs.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto j = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return (1.0 - t) * fs[j - 1] + t * fs[j];
}

// sup{k in [lo, hi] : pred(k)} for a predicate that holds on an initial segment.
template <class Pred>
double last_true(double lo, double hi, double resolution, Pred&& pred) {
  for (int it = 0; it < 200 && hi - lo > resolution; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) lo = mid; else hi = mid;
  }
  return lo;
}

// inf{k in [lo, hi] : pred(k)} for a predicate that holds on a final segment.
template <class Pred>
double first_true(double lo, double hi, double resolution, Pred&& pred) {
  for (int it = 0; it < 200 && hi - lo > resolution; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

double exact_psi(const Model& model, PointRef x, double y) {
  const LevelField field(model, y);
  return field.sublevel_mass(model.surplus().dy(x, y)) - model.target_cdf(y);
}

int noisy_sign(double v, double noise) { return v > noise ? 1 : (v < -noise ? -1 : 0); }

}  // namespace

std::vector<double> chebyshev_grid(const TargetInterval& target, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "y grid needs at least two nodes");
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] =
        target.mid() - 0.5 * target.width() * std::cos(std::numbers::pi * (i + 0.5) / n);
  }
  return y;
}

// ---------------------------------------------------------------------------
// SplitCurve

std::vector<double> SplitCurve::extended_nodes() const {
  std::vector<double> t;
  t.reserve(y.size() + 2);
  t.push_back(target.lo);
  t.insert(t.end(), y.begin(), y.end());
  t.push_back(target.hi);
  return t;
}

std::vector<double> SplitCurve::extended_k() const {
  std::vector<double> k;
  k.reserve(k_plus.size() + 2);
  k.push_back(k_lo);
  k.insert(k.end(), k_plus.begin(), k_plus.end());
  k.push_back(k_hi);
  return k;
}

void SplitCurve::finalize() {
  const std::size_t n = y.size();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "split curve needs at least three nodes");
  kprime_fd.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    kprime_fd[i] =
        quadratic_slope(y[c - 1], k_plus[c - 1], y[c], k_plus[c], y[c + 1], k_plus[c + 1], y[i]);
  }
  if (kprime.size() != n) kprime.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (tangential.size() != n) tangential.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!tangential[i] && std::isfinite(kprime[i])) continue;
    const std::size_t a = i + 1 < n ? i : i - 1;
    kprime[i] = (k_plus[a + 1] - k_plus[a]) / (y[a + 1] - y[a]);
  }
  auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(extended_nodes(),
                                                                                       extended_k());
  const double lo = target.lo;
  const double hi = target.hi;
  k_interp_ = std::make_shared<const std::function<double(double)>>(
      [spline, lo, hi](double t) { return (*spline)(std::clamp(t, lo, hi)); });
}

double SplitCurve::k(double yy) const {
  if (!k_interp_) throw Error(ErrorKind::InvalidArgument, "split curve is not finalized");
  return (*k_interp_)(yy);
}

double SplitCurve::kprime_at(double yy) const { return linear_at(y, kprime, yy); }

double SplitCurve::kprime_fd_at(double yy) const { return linear_at(y, kprime_fd, yy); }

SplitCurve solve_split_curve(const Model& model, std::span<const double> y_grid, const SolverSettings& settings) {
  const TargetInterval& target = model.target();
  for (std::size_t i = 0; i < y_grid.size(); ++i) {
    if (!(y_grid[i] > target.lo && y_grid[i] < target.hi)) {
      throw Error(ErrorKind::OutOfRange, "y grid must lie inside the open target interval");
    }
    if (i > 0 && !(y_grid[i] > y_grid[i - 1])) throw Error(ErrorKind::InvalidArgument, "y grid must be increasing");
  }
  const double tol = settings.tol_mass;

  SplitCurve c;
  c.target = target;
  c.y.assign(y_grid.begin(), y_grid.end());
  const std::size_t n = c.y.size();
  c.k_minus.resize(n);
  c.k_plus.resize(n);
  c.kprime.resize(n);
  c.h_y.resize(n);
  c.h_k.resize(n);
  c.area.resize(n);
  c.epsilon.resize(n);
  c.tangential.assign(n, 0);
  c.plateau.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const double y = c.y[i];
    const LevelField field(model, y);
    const double G = model.target_cdf(y);
    const double range = std::max(field.max_level() - field.min_level(), 1e-300);
    const double res = 1e-13 * range;
    double a = field.min_level() - 1e-3 * range;
    double b = field.max_level() + 1e-3 * range;
    const auto h = [&](double k) { return field.sublevel_mass(k) - G; };
    if (h(a) > tol || h(b) < -tol) {
      throw Error(ErrorKind::BracketFailure, "split function has no sign change at y = " + std::to_string(y));
    }
    // Locate one admissible level, then the two ends of the admissible interval.
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200 && b - a > res; ++it) {
      mid = 0.5 * (a + b);
      const double hm = h(mid);
      if (hm > tol) b = mid;
      else if (hm < -tol) a = mid;
      else break;
    }
    c.k_plus[i] = last_true(mid, b, res, [&](double k) { return h(k) <= tol; });
    c.k_minus[i] = first_true(a, mid, res, [&](double k) { return h(k) >= -tol; });
    c.plateau[i] = (c.k_plus[i] - c.k_minus[i]) > settings.plateau_gap * range;

    const double k = c.k_plus[i];
    const double eps = settings.epsilon > 0.0 ? settings.epsilon : field.default_epsilon(k);
    c.epsilon[i] = eps;
    try {
      const GradH gh = grad_h(field, k, eps);
      c.h_y[i] = gh.h_y;
      c.h_k[i] = gh.h_k;
      c.kprime[i] = gh.h_k > 0.0 ? -gh.h_y / gh.h_k : std::numeric_limits<double>::quiet_NaN();
      if (settings.estimator == Estimator::Contour2d && model.dim() == 2) {
        c.area[i] = level_set_sizes(model, y, k, eps, Estimator::Contour2d).area;
      } else {
        c.area[i] = field.band_integral(k, eps, [](Eigen::Index) { return 1.0; });
      }
      c.tangential[i] = tangential_check(field, k, eps, settings.tangential_fraction).tangential;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyBand) throw;
      c.kprime[i] = std::numeric_limits<double>::quiet_NaN();
      c.tangential[i] = 1;
    }
  }

  {
    const LevelField lo_field(model, target.lo);
    const double range = std::max(lo_field.max_level() - lo_field.min_level(), 1e-300);
    c.k_lo = last_true(lo_field.min_level() - 1e-3 * range, lo_field.max_level() + 1e-3 * range, 1e-13 * range,
                       [&](double k) { return lo_field.sublevel_mass(k) <= tol; });
  }
  {
    const LevelField hi_field(model, target.hi);
    const double range = std::max(hi_field.max_level() - hi_field.min_level(), 1e-300);
    c.k_hi = first_true(hi_field.min_level() - 1e-3 * range, hi_field.max_level() + 1e-3 * range, 1e-13 * range,
                        [&](double k) { return hi_field.sublevel_mass(k) >= 1.0 - tol; });
  }
  c.finalize();
  return c;
}

// ---------------------------------------------------------------------------
// Payoffs

namespace {

// Integral of a cubic over [a, b] by two-point Gauss (exact for cubics).
double gauss2(const std::function<double(double)>& f, double a, double b) {
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (a + b);
  const double d = h / std::sqrt(3.0);
  return h * (f(m - d) + f(m + d));
}

}  // namespace

HusbandPayoff HusbandPayoff::from_curve(const SplitCurve& curve) {
  HusbandPayoff v;
  v.target_ = curve.target;
  v.nodes_ = curve.extended_nodes();
  v.slopes_ = curve.extended_k();
  v.values_.assign(v.nodes_.size(), 0.0);
  // k is piecewise cubic between the nodes, so the cell integrals are exact.
  const std::function<double(double)> k = [&curve](double t) { return curve.k(t); };
  for (std::size_t j = 1; j < v.nodes_.size(); ++j) {
    v.values_[j] = v.values_[j - 1] + gauss2(k, v.nodes_[j - 1], v.nodes_[j]);
  }
  v.k_ = k_holder(curve);
  return v;
}

HusbandPayoff HusbandPayoff::zero(const TargetInterval& target) {
  HusbandPayoff v;
  v.target_ = target;
  v.nodes_ = {target.lo, target.hi};
  v.values_ = {0.0, 0.0};
  v.slopes_ = {0.0, 0.0};
  v.k_ = std::make_shared<const std::function<double(double)>>([](double) { return 0.0; });
  return v;
}

std::shared_ptr<const std::function<double(double)>> HusbandPayoff::k_holder(const SplitCurve& curve) {
  auto copy = std::make_shared<SplitCurve>(curve);
  return std::make_shared<const std::function<double(double)>>([copy](double t) { return copy->k(t); });
}

double HusbandPayoff::operator()(double y) const {
  if (!target_.contains_closed(y)) throw Error(ErrorKind::OutOfRange, "husband payoff queried outside Y");
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y);
  std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
  j = std::clamp<std::size_t>(j, 1, nodes_.size() - 1) - 1;
  if (y == nodes_[j]) return values_[j];
  return values_[j] + gauss2(*k_, nodes_[j], y);
}

std::vector<double> husband_payoff(const SplitCurve& curve) {
  const HusbandPayoff v = HusbandPayoff::from_curve(curve);
  return std::vector<double>(v.values().begin() + 1, v.values().end() - 1);
}

WifePayoff wife_payoff(const Model& model, const HusbandPayoff& v, PointRef x) {
  const Surplus& s = model.surplus();
  const auto& t = v.nodes();
  const auto& vals = v.values();
  const auto objective = [&](double y) { return s.value(x, y) - v(y); };

  // Scan a refined grid: the payoff nodes plus three interior points per cell.
  constexpr int kSub = 4;
  double best = -std::numeric_limits<double>::infinity();
  double best_y = t.front();
  std::size_t best_cell = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double val = s.value(x, t[j]) - vals[j];
    if (val > best) {
      best = val;
      best_y = t[j];
      best_cell = j;
    }
    if (j + 1 == t.size()) break;
    for (int q = 1; q < kSub; ++q) {
      const double yq = t[j] + (t[j + 1] - t[j]) * q / kSub;
      const double vq = objective(yq);
      if (vq > best) {
        best = vq;
        best_y = yq;
        best_cell = j;
      }
    }
  }
  const double a = t[best_cell == 0 ? 0 : best_cell - 1];
  const double b = t[std::min(best_cell + 2, t.size() - 1)];
  const auto r = boost::math::tools::brent_find_minima([&](double y) { return -objective(y); }, a, b,
                                                       std::numeric_limits<double>::digits);
  WifePayoff out{best, best_y};
  if (-r.second > best) out = WifePayoff{-r.second, r.first};
  return out;
}

// ---------------------------------------------------------------------------
// Maps

namespace {

double level_map(const Model& model, const SplitCurve& curve, PointRef x, const SolverSettings& settings) {
  const Surplus& s = model.surplus();
  const auto t = curve.extended_nodes();
  const auto k = curve.extended_k();
  const auto phi = [&](double y) { return s.dy(x, y) - curve.k(y); };
  double prev = s.dy(x, t[0]) - k[0];
  if (prev <= 0.0) return t.front();
  for (std::size_t j = 1; j < t.size(); ++j) {
    const double cur = s.dy(x, t[j]) - k[j];
    if (cur <= 0.0) {
      double a = t[j - 1];
      double b = t[j];
      const double tol = settings.map_tol * curve.target.width();
      for (int it = 0; it < 200 && b - a > tol; ++it) {
        const double mid = 0.5 * (a + b);
        if (phi(mid) > 0.0) a = mid; else b = mid;
      }
      const double y = 0.5 * (a + b);
      if (s.grad_x_dy(x, y).norm() < 1e-8 * model.domain().box_scale()) {
        throw Error(ErrorKind::Degenerate, "grad_x s_y vanishes at the mapped point");
      }
      return y;
    }
    prev = cur;
  }
  return t.back();
}

}  // namespace

double splitting_map(const Model& model, const SplittingScanner& scanner, PointRef x, const SolverSettings& settings) {
  const auto brackets = scanner.brackets(x);
  if (brackets.size() > 1) {
    throw NonNestedError("population split has several roots", scanner.roots(x));
  }
  const auto& t = scanner.nodes();
  const auto psi = scanner.psi(x);
  const TargetInterval& target = model.target();

  // Raw +/- change of the profile values localises the root; the exact
  // splitting function then decides the bracket.
  std::size_t j = 0;
  if (psi.front() <= 0.0) {
    j = 0;
  } else {
    j = t.size() - 1;
    for (std::size_t q = 1; q < t.size(); ++q) {
      if (psi[q] <= 0.0) {
        j = q;
        break;
      }
    }
  }
  std::size_t ia = j == 0 ? 0 : j - 1;
  std::size_t ib = j;
  while (ia > 0 && exact_psi(model, x, t[ia]) <= 0.0) --ia;
  if (ia == 0 && exact_psi(model, x, t[0]) <= 0.0) return target.lo;
  while (ib + 1 < t.size() && exact_psi(model, x, t[ib]) > 0.0) ++ib;
  if (exact_psi(model, x, t[ib]) > 0.0) return target.hi;

  double a = t[ia];
  double b = t[ib];
  const double tol = settings.map_tol * target.width();
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double mid = 0.5 * (a + b);
    if (exact_psi(model, x, mid) > 0.0) a = mid; else b = mid;
  }
  return 0.5 * (a + b);
}

double optimal_map(const Model& model, const SplitCurve& curve, PointRef x, MapMethod method,
                   const SolverSettings& settings) {
  if (method == MapMethod::ByLevel) return level_map(model, curve, x, settings);
  const SplittingScanner scanner(model, settings.splitting_scan, settings.splitting_noise);
  return splitting_map(model, scanner, x, settings);
}

Vector map_gradient(const Model& model, const SplitCurve& curve, PointRef x, const SolverSettings& settings) {
  const double y = level_map(model, curve, x, settings);
  const Surplus& s = model.surplus();
  const double denom = curve.kprime_at(y) - s.dyy(x, y);
  if (!(denom > settings.zero_speed)) {
    throw Error(ErrorKind::ZeroSpeed, "level-set speed k' - s_yy vanishes at the mapped point");
  }
  return s.grad_x_dy(x, y) / denom;
}

double balance_residual(const Model& model, const SplitCurve& curve, double y, double epsilon) {
  const LevelField field(model, y);
  const double k = curve.k(y);
  const double eps = epsilon > 0.0 ? epsilon : field.default_epsilon(k);
  const double kp = curve.kprime_fd_at(y);
  const auto& quad = model.quadrature();
  const auto& f = model.density_at_points();
  const auto& gn = field.grad_norms();
  const Surplus& s = model.surplus();
  Eigen::Index count = 0;
  const double integral = field.band_integral(
      k, eps, [&](Eigen::Index i) { return f[i] * (kp - s.dyy(quad.point(i), y)) / gn[i]; }, &count);
  if (count == 0) throw Error(ErrorKind::EmptyBand, "no quadrature points in the band around the level set");
  return model.g(y) - integral;
}

double pushforward_distance(const Model& model, const std::function<double(PointRef)>& map, int resolution) {
  const auto& quad = model.quadrature();
  const Array& mw = model.mass_weights();
  const Eigen::Index n = quad.size();
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = {map(quad.point(i)), mw[i]};
  std::sort(pts.begin(), pts.end());
  const TargetInterval& target = model.target();
  const int r = std::max(resolution, 2);
  double worst = 0.0;
  double cum = 0.0;
  std::size_t p = 0;
  for (int q = 0; q < r; ++q) {
    const double y = target.lo + target.width() * q / (r - 1);
    while (p < pts.size() && pts[p].first <= y) cum += pts[p++].second;
    worst = std::max(worst, std::abs(cum - model.target_cdf(y)));
  }
  return worst;
}

double pushforward_distance(const Model& model, const SplitCurve& curve, int resolution) {
  const SolverSettings settings;
  return pushforward_distance(
      model, [&](PointRef x) { return level_map(model, curve, x, settings); }, resolution);
}

// ---------------------------------------------------------------------------
// Splitting scans

SublevelProfile::SublevelProfile(const LevelField& field, std::size_t max_knots) {
  const Array& mw = field.model().mass_weights();
  const Array& vals = field.values();
  const auto n = static_cast<std::size_t>(vals.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vals[static_cast<Eigen::Index>(a)] < vals[static_cast<Eigen::Index>(b)];
  });
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    acc += mw[static_cast<Eigen::Index>(order[q])];
    cum[q] = acc;
  }
  const std::size_t knots = std::min(std::max<std::size_t>(max_knots, 2), n);
  levels_.reserve(knots);
  masses_.reserve(knots);
  for (std::size_t q = 0; q < knots; ++q) {
    const std::size_t idx = knots == 1 ? 0 : (q * (n - 1)) / (knots - 1);
    levels_.push_back(vals[static_cast<Eigen::Index>(order[idx])]);
    masses_.push_back(cum[idx]);
  }
}

double SublevelProfile::mass(double k) const {
  if (levels_.empty() || k < levels_.front()) return 0.0;
  if (k >= levels_.back()) return masses_.back();
  return linear_at(levels_, masses_, k);
}

SplittingScanner::SplittingScanner(const Model& model, int scan_nodes, double noise)
    : model_(&model), noise_(noise) {
  const int n = std::max(scan_nodes, 3);
  const TargetInterval& target = model.target();
  nodes_.resize(static_cast<std::size_t>(n));
  cdf_.resize(static_cast<std::size_t>(n));
  profiles_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double y = i + 1 == n ? target.hi : target.lo + target.width() * i / (n - 1);
    nodes_[static_cast<std::size_t>(i)] = y;
    cdf_[static_cast<std::size_t>(i)] = model.target_cdf(y);
    profiles_.emplace_back(LevelField(model, y));
  }
}

std::vector<double> SplittingScanner::psi(PointRef x) const {
  const Surplus& s = model_->surplus();
  std::vector<double> out(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    out[i] = profiles_[i].mass(s.dy(x, nodes_[i])) - cdf_[i];
  }
  return out;
}

std::vector<std::pair<double, double>> SplittingScanner::brackets(PointRef x) const {
  const auto p = psi(x);
  std::vector<std::pair<double, double>> out;
  int last_sign = 0;
  std::size_t last_idx = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int sg = noisy_sign(p[i], noise_);
    if (sg == 0) continue;
    if (last_sign != 0 && sg != last_sign) out.emplace_back(nodes_[last_idx], nodes_[i]);
    last_sign = sg;
    last_idx = i;
  }
  return out;
}

std::vector<double> SplittingScanner::roots(PointRef x) const {
  const auto p = psi(x);
  std::vector<double> out;
  int last_sign = 0;
  std::size_t last_idx = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int sg = noisy_sign(p[i], noise_);
    if (sg == 0) continue;
    if (last_sign != 0 && sg != last_sign) {
      // First raw sign change inside the bracket.
      double root = 0.5 * (nodes_[last_idx] + nodes_[i]);
      for (std::size_t q = last_idx; q < i; ++q) {
        if ((p[q] > 0.0) != (p[q + 1] > 0.0)) {
          const double w = p[q] / (p[q] - p[q + 1]);
          root = nodes_[q] + w * (nodes_[q + 1] - nodes_[q]);
          break;
        }
      }
      out.push_back(root);
    }
    last_sign = sg;
    last_idx = i;
  }
  return out;
}

// ---------------------------------------------------------------------------

MatchSolution MatchSolution::solve(const Model& model, const SolverSettings& settings) {
  MatchSolution sol;
  sol.model_ = &model;
  sol.settings_ = settings;
  const auto grid = chebyshev_grid(model.target(), settings.y_nodes);
  sol.curve_ = solve_split_curve(model, grid, settings);
  sol.payoff_ = HusbandPayoff::from_curve(sol.curve_);
  return sol;
}

const SplittingScanner& MatchSolution::scanner() const {
  std::call_once(*scanner_once_, [this] {
    *scanner_ = std::make_shared<SplittingScanner>(*model_, settings_.splitting_scan, settings_.splitting_noise);
  });
  return **scanner_;
}

double MatchSolution::map(PointRef x, MapMethod method) const {
  if (method == MapMethod::ByLevel) return level_map(*model_, curve_, x, settings_);
  return splitting_map(*model_, scanner(), x, settings_);
}

}  // namespace nestor
