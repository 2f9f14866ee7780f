#include "nestor/nestedness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nestor/error.hpp"

namespace nestor {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Nested: return "nested";
    case Verdict::NonNested: return "non-nested";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "nested") return Verdict::Nested;
  if (s == "non-nested") return Verdict::NonNested;
  if (s == "inconclusive") return Verdict::Inconclusive;
  throw Error(ErrorKind::InvalidArgument, "unknown verdict '" + s + "'");
}

std::vector<std::pair<double, double>> default_monotonicity_pairs(const SplitCurve& curve, int stride) {
  std::vector<std::pair<double, double>> pairs;
  const std::size_t n = curve.size();
  const auto s = static_cast<std::size_t>(std::max(stride, 1));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    pairs.emplace_back(curve.y[i], curve.y[i + 1]);
    if (s > 1 && i % s == 0 && i + s < n) pairs.emplace_back(curve.y[i], curve.y[i + s]);
  }
  if (n >= 2) pairs.emplace_back(curve.y.front(), curve.y.back());
  return pairs;
}

MonotonicityResult check_sublevel_monotonicity(const Model& model, const SplitCurve& curve,
                                               std::span<const std::pair<double, double>> y_pairs,
                                               std::size_t max_witnesses) {
  MonotonicityResult out;
  const auto& quad = model.quadrature();
  for (auto [y, y2] : y_pairs) {
    ++out.pairs_checked;
    if (y == y2) continue;
    if (y > y2) std::swap(y, y2);
    const LevelField a(model, y);
    const LevelField b(model, y2);
    const double ka = curve.k(y);
    const double kb = curve.k(y2);
    double worst = 0.0;
    Eigen::Index worst_i = -1;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a.values()[i] > ka - a.spread(i).cell_half) continue;
      const double margin = b.values()[i] - kb;
      if (margin > b.spread(i).cell_half && margin > worst) {
        worst = margin;
        worst_i = i;
      }
    }
    if (worst_i >= 0) {
      out.pass = false;
      out.worst_margin = std::max(out.worst_margin, worst);
      out.violations.push_back({y, y2, Vector(quad.point(worst_i)), worst});
    }
  }
  std::sort(out.violations.begin(), out.violations.end(),
            [](const auto& p, const auto& q) { return p.margin > q.margin; });
  if (out.violations.size() > max_witnesses) out.violations.resize(max_witnesses);
  return out;
}

namespace {

struct SpeedSample {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  Eigen::Index count = 0;
  // |k'(eps) - k'(2 eps)|, the band-width sensitivity of k'.
  double kprime_drift = 0.0;
  // Largest change of s_yy over one grid cell along an axis, at the samples.
  double cell_variation = 0.0;
};

// k' - s_yy over the band points of node i, each moved onto the level set by
// one Newton step and kept when it stays inside X.
SpeedSample node_speed(const Model& model, const SplitCurve& curve, std::size_t i) {
  const double y = curve.y[i];
  const double k = curve.k_plus[i];
  const double kp = curve.kprime[i];
  const LevelField field(model, y);
  const double eps = curve.epsilon[i] > 0.0 ? curve.epsilon[i] : field.default_epsilon(curve.k_plus[i]);
  const auto& quad = model.quadrature();
  const auto& dom = model.domain();
  const Surplus& s = model.surplus();
  SpeedSample out;
  Vector xp(model.dim());
  Vector xs(model.dim());
  for (Eigen::Index j = 0; j < field.size(); ++j) {
    if (std::abs(field.values()[j] - k) >= eps + field.spread(j).half) continue;
    if (field.band_weight(j, k, eps) <= 0.0) continue;
    const double gn2 = field.grad_norms()[j] * field.grad_norms()[j];
    if (gn2 <= 0.0) continue;
    xp = quad.point(j) - ((field.values()[j] - k) / gn2) * field.gradients().col(j);
    if (!dom.inside(xp)) continue;
    const double syy = s.dyy(xp, y);
    for (int a = 0; a < model.dim(); ++a) {
      xs = xp;
      xs[a] += quad.spacing()[a];
      out.cell_variation = std::max(out.cell_variation, std::abs(s.dyy(xs, y) - syy));
    }
    const double d = kp - syy;
    out.min = std::min(out.min, d);
    out.max = std::max(out.max, d);
    ++out.count;
  }
  const GradH wide = grad_h(field, k, 2.0 * eps);
  if (wide.h_k > 0.0 && std::isfinite(kp)) out.kprime_drift = std::abs(kp + wide.h_y / wide.h_k);
  return out;
}

}  // namespace

DynamicResult dynamic_criterion(const Model& model, const SplitCurve& curve, std::span<const std::size_t> node_ids) {
  DynamicResult out;
  const double scale = model.surplus_scale();
  for (const std::size_t i : node_ids) {
    if (curve.tangential[i]) {
      ++out.skipped;
      continue;
    }
    const SpeedSample sp = node_speed(model, curve, i);
    // Level sets shrinking into a corner can leave no projected sample inside X.
    if (sp.count == 0) {
      ++out.skipped;
      continue;
    }
    const double tol = 1e-4 * scale + std::abs(curve.kprime[i] - curve.kprime_fd[i]) + sp.kprime_drift + sp.cell_variation;
    DynamicNode node{curve.y[i], sp.min, sp.max, tol, sp.count};
    if (node.min < -node.tol || !(node.max > 0.0)) out.pass = false;
    if (!(node.min > 0.0)) out.strict = false;
    out.nodes.push_back(node);
  }
  if (out.nodes.empty()) out.strict = false;
  return out;
}

DynamicResult dynamic_criterion(const Model& model, const SplitCurve& curve) {
  std::vector<std::size_t> ids(curve.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return dynamic_criterion(model, curve, ids);
}

std::vector<Vector> splitting_probes(const Model& model, int count, std::uint64_t seed) {
  const auto& quad = model.quadrature();
  const auto& flags = quad.boundary_flags();
  std::vector<Eigen::Index> interior;
  std::vector<Eigen::Index> boundary;
  for (Eigen::Index i = 0; i < quad.size(); ++i) (flags[static_cast<std::size_t>(i)] ? boundary : interior).push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<Vector> probes;
  probes.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const auto pick = [&](const std::vector<Eigen::Index>& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    probes.emplace_back(quad.point(pool[d(rng)]));
  };
  for (int c = 0; c < count; ++c) {
    const bool use_boundary = (c % 2 == 1 && !boundary.empty()) || interior.empty();
    pick(use_boundary ? boundary : interior);
  }
  return probes;
}

UniqueSplittingResult unique_splitting_check(const SplittingScanner& scanner, std::span<const Vector> probes) {
  UniqueSplittingResult out;
  for (const Vector& x : probes) {
    ++out.probes_checked;
    if (scanner.brackets(x).size() > 1) {
      out.pass = false;
      out.witnesses.push_back({x, scanner.roots(x)});
    }
  }
  return out;
}

TransversalityResult transversality_diagnostic(const Model& model, const SplitCurve& curve,
                                               std::span<const std::size_t> node_ids) {
  if (!model.domain().has_boundary_oracle()) {
    throw Error(ErrorKind::NoBoundaryOracle, "domain has no boundary normal oracle");
  }
  std::vector<std::size_t> all;
  if (node_ids.empty()) {
    all.resize(curve.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    node_ids = all;
  }
  const auto& quad = model.quadrature();
  const auto& flags = quad.boundary_flags();
  TransversalityResult out;
  for (const std::size_t i : node_ids) {
    const double y = curve.y[i];
    const LevelField field(model, y);
    const double eps = curve.epsilon[i] > 0.0 ? curve.epsilon[i] : field.default_epsilon(curve.k_plus[i]);
    for (Eigen::Index j = 0; j < field.size(); ++j) {
      if (!flags[static_cast<std::size_t>(j)]) continue;
      if (field.band_weight(j, curve.k_plus[i], eps) <= 0.0) continue;
      const double t = transversality_at(model, y, quad.point(j));
      if (t < out.min) out = {t, y, Vector(quad.point(j))};
    }
  }
  return out;
}

double speed_limit(const Model& model, const SplitCurve& curve, const TargetInterval& region) {
  double ell = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.tangential[i] || !region.contains_closed(curve.y[i])) continue;
    const SpeedSample sp = node_speed(model, curve, i);
    if (sp.count > 0) ell = std::min(ell, sp.min);
  }
  return ell;
}

double sampled_map_lipschitz(const MatchSolution& solution, int pairs, std::uint64_t seed, double radius) {
  const Model& model = solution.model();
  const auto& quad = model.quadrature();
  const auto& dom = model.domain();
  const int m = model.dim();
  const double r = radius > 0.0 ? radius : 1e-3 * dom.box_scale();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, quad.size() - 1);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < pairs && attempt < 100 * pairs; ++attempt) {
    Vector x = quad.point(pick(rng));
    for (int j = 0; j < m; ++j) x[j] += unit(rng) * quad.spacing()[j];
    Vector dir(m);
    for (int j = 0; j < m; ++j) dir[j] = normal(rng);
    if (dir.norm() == 0.0) continue;
    const Vector x2 = x + r * dir.normalized();
    if (!dom.inside(x) || !dom.inside(x2)) continue;
    const double q = std::abs(solution.map(x) - solution.map(x2)) / (x2 - x).norm();
    worst = std::max(worst, q);
    ++done;
  }
  return worst;
}

NestednessReport assess_nestedness(const MatchSolution& solution, const NestednessOptions& options) {
  const Model& model = solution.model();
  const SplitCurve& curve = solution.curve();
  NestednessReport r;
  const auto pairs = default_monotonicity_pairs(curve, options.monotonicity_stride);
  r.monotone = check_sublevel_monotonicity(model, curve, pairs);
  r.dynamic = dynamic_criterion(model, curve);
  const auto probes = splitting_probes(model, options.probes, options.seed);
  r.unique_splitting = unique_splitting_check(solution.scanner(), probes);
  if (model.domain().has_boundary_oracle() && model.dim() >= 2) {
    r.transversality = transversality_diagnostic(model, curve);
  }
  r.speed_limit = speed_limit(model, curve, model.target());
  r.notes.push_back("g > 0 on Y is assumed, so nu of every open subinterval is positive");
  const auto tangential = static_cast<std::size_t>(std::count(curve.tangential.begin(), curve.tangential.end(), 1));
  if (tangential > 0) {
    r.notes.push_back(std::to_string(tangential) + " tangential node(s) skipped by the dynamic criterion");
  }
  const bool failed = !r.monotone.pass || !r.dynamic.pass || !r.unique_splitting.pass;
  if (failed) {
    r.verdict = Verdict::NonNested;
  } else if (!r.dynamic.nodes.empty() && 2 * tangential < curve.size()) {
    r.verdict = Verdict::Nested;
  } else {
    r.verdict = Verdict::Inconclusive;
  }
  return r;
}

}  // namespace nestor
