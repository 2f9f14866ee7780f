#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nestor/level_sets.hpp"
#include "nestor/model.hpp"
#include "nestor/types.hpp"

namespace nestor {

struct SolverSettings {
  /// |h(y, k)| tolerance for the bisection in k.
  double tol_mass = 1e-6;
  int y_nodes = 257;
  /// Band half-width; <= 0 selects the automatic width per node.
  double epsilon = 0.0;
  Estimator estimator = Estimator::Band;
  /// Root tolerance for F, relative to |Y|.
  double map_tol = 1e-8;
  /// A gap k_plus - k_minus above this fraction of the s_y range is a mass plateau.
  double plateau_gap = 1e-3;
  /// Band fraction along the boundary that marks a node tangential.
  double tangential_fraction = 0.05;
  /// Denominators k' - s_yy at or below this raise ZeroSpeed.
  double zero_speed = 1e-6;
  /// Scan nodes for the splitting map and unique-splitting searches.
  int splitting_scan = 129;
  /// |psi| at or below this counts as zero when counting sign changes.
  double splitting_noise = 2e-3;
};

/// n Chebyshev points of the first kind in the open interval, ascending.
std::vector<double> chebyshev_grid(const TargetInterval& target, int n);

/// Solved level-splitting curve k(y) on a grid of Y.
///
/// Per-node data are public; call `finalize()` after editing them to rebuild
/// the interpolants. k between nodes is the monotone piecewise-cubic (PCHIP)
/// interpolant through (y_lo, k_lo), the nodes and (y_hi, k_hi).
struct SplitCurve {
  TargetInterval target;
  std::vector<double> y;
  std::vector<double> k_minus;
  std::vector<double> k_plus;
  /// -h_y / h_k at non-tangential nodes, one-sided difference quotient otherwise.
  std::vector<double> kprime;
  /// Three-point finite differences of k_plus on the non-uniform grid.
  std::vector<double> kprime_fd;
  std::vector<double> h_y;
  std::vector<double> h_k;
  std::vector<double> area;
  std::vector<double> epsilon;
  std::vector<unsigned char> tangential;
  std::vector<unsigned char> plateau;
  /// Limits of k at the ends of Y.
  double k_lo = 0.0;
  double k_hi = 0.0;

  std::size_t size() const { return y.size(); }
  double k(double yy) const;
  double kprime_at(double yy) const;
  double kprime_fd_at(double yy) const;
  /// Nodes including both ends of Y, and k at them.
  std::vector<double> extended_nodes() const;
  std::vector<double> extended_k() const;

  /// Recomputes kprime_fd and the interpolants from y / k_plus / kprime.
  void finalize();

 private:
  std::shared_ptr<const std::function<double(double)>> k_interp_;
};

/// Solves h(y, k) = 0 at every node by bisection in k between the sampled
/// extremes of s_y. Throws BracketFailure when h has no sign change.
SplitCurve solve_split_curve(const Model& model, std::span<const double> y_grid, const SolverSettings& settings = {});

/// Husband payoff v with v(y_lo) = 0: the exact antiderivative of the
/// interpolated k, so v' = k everywhere on Y.
class HusbandPayoff {
 public:
  static HusbandPayoff from_curve(const SplitCurve& curve);
  /// v identically zero on Y (used as an explicit override).
  static HusbandPayoff zero(const TargetInterval& target);

  double operator()(double y) const;
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  const TargetInterval& target() const { return target_; }

 private:
  TargetInterval target_;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  std::shared_ptr<const std::function<double(double)>> k_;

  static std::shared_ptr<const std::function<double(double)>> k_holder(const SplitCurve& curve);
};

/// v on the curve's own grid.
std::vector<double> husband_payoff(const SplitCurve& curve);

enum class MapMethod { ByLevel, BySplitting };

/// F(x): by-level finds the downward root of s_y(x, y) - k(y); by-splitting
/// the root of psi_x(y) = mu[X_<=(y, s_y(x, y))] - G(y). Both clamp to the ends
/// of Y. By-splitting throws NonNestedError when psi_x has several sign changes.
double optimal_map(const Model& model, const SplitCurve& curve, PointRef x, MapMethod method = MapMethod::ByLevel,
                   const SolverSettings& settings = {});

struct WifePayoff {
  double u = 0.0;
  double argmax = 0.0;
};

/// u(x) = sup_y s(x, y) - v(y): grid maximum refined by Brent's method in the
/// bracketing cells.
WifePayoff wife_payoff(const Model& model, const HusbandPayoff& v, PointRef x);

/// DF(x) = grad_x s_y(x, F) / (k'(F) - s_yy(x, F)). Throws ZeroSpeed when the
/// denominator is at or below settings.zero_speed.
Vector map_gradient(const Model& model, const SplitCurve& curve, PointRef x, const SolverSettings& settings = {});

/// g(y) minus the band integral of f (k' - s_yy) / |grad_x s_y| over
/// X(y, k(y)), with k' taken from finite differences of the solved curve.
double balance_residual(const Model& model, const SplitCurve& curve, double y, double epsilon = 0.0);

/// Kolmogorov-Smirnov distance between the mu-weighted distribution of map(x)
/// over the quadrature points and G, checked at `resolution` points of Y.
double pushforward_distance(const Model& model, const std::function<double(PointRef)>& map, int resolution = 513);
double pushforward_distance(const Model& model, const SplitCurve& curve, int resolution = 513);

/// mu[X_<=(y, .)] at one y as a sorted, down-sampled cumulative table.
class SublevelProfile {
 public:
  SublevelProfile(const LevelField& field, std::size_t max_knots = 4097);
  double mass(double k) const;

 private:
  std::vector<double> levels_;
  std::vector<double> masses_;
};

/// psi_x(y) = mu[X_<=(y, s_y(x, y))] - G(y) on a fixed uniform scan of Y.
class SplittingScanner {
 public:
  SplittingScanner(const Model& model, int scan_nodes, double noise);

  const std::vector<double>& nodes() const { return nodes_; }
  std::vector<double> psi(PointRef x) const;
  /// Roots located by sign changes of psi (|psi| <= noise counts as zero),
  /// linearly interpolated between scan nodes.
  std::vector<double> roots(PointRef x) const;
  /// Brackets [a, b] of the sign changes.
  std::vector<std::pair<double, double>> brackets(PointRef x) const;

 private:
  const Model* model_;
  double noise_;
  std::vector<double> nodes_;
  std::vector<double> cdf_;
  std::vector<SublevelProfile> profiles_;
};

/// By-splitting map using a prebuilt scanner.
double splitting_map(const Model& model, const SplittingScanner& scanner, PointRef x, const SolverSettings& settings);

/// Solved curve, payoffs and evaluators for one model.
class MatchSolution {
 public:
  static MatchSolution solve(const Model& model, const SolverSettings& settings = {});

  const Model& model() const { return *model_; }
  const SplitCurve& curve() const { return curve_; }
  const HusbandPayoff& payoff() const { return payoff_; }
  const SolverSettings& settings() const { return settings_; }

  double map(PointRef x, MapMethod method = MapMethod::ByLevel) const;
  WifePayoff wife(PointRef x) const { return wife_payoff(*model_, payoff_, x); }
  double u(PointRef x) const { return wife(x).u; }
  double v(double y) const { return payoff_(y); }
  Vector map_gradient(PointRef x) const { return nestor::map_gradient(*model_, curve_, x, settings_); }
  /// Splitting scanner, built on first use.
  const SplittingScanner& scanner() const;

 private:
  const Model* model_ = nullptr;
  SolverSettings settings_;
  SplitCurve curve_;
  HusbandPayoff payoff_;
  std::shared_ptr<std::once_flag> scanner_once_ = std::make_shared<std::once_flag>();
  std::shared_ptr<std::shared_ptr<SplittingScanner>> scanner_ = std::make_shared<std::shared_ptr<SplittingScanner>>();
};

}  // namespace nestor
