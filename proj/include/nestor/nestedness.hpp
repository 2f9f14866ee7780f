#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nestor/nested_solver.hpp"

namespace nestor {

enum class Verdict { Nested, NonNested, Inconclusive };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct MonotonicityViolation {
  double y = 0.0;
  double y2 = 0.0;
  Vector x;
  /// s_y(x, y2) - k(y2) for a point with s_y(x, y) <= k(y).
  double margin = 0.0;
};

struct MonotonicityResult {
  bool pass = true;
  int pairs_checked = 0;
  double worst_margin = 0.0;
  /// Worst violation per failing pair, largest margin first (capped).
  std::vector<MonotonicityViolation> violations;
};

/// Pairs (y_i, y_{i+1}) and (y_i, y_{i+stride}) over the curve nodes, plus the
/// two extreme nodes.
std::vector<std::pair<double, double>> default_monotonicity_pairs(const SplitCurve& curve, int stride = 8);

/// Checks X_<=(y, k(y)) inside X_<(y', k(y')) on the quadrature points for
/// every pair y < y'. A point only counts as a violation when its margin
/// exceeds the spread of s_y(., y') over its own cell.
MonotonicityResult check_sublevel_monotonicity(const Model& model, const SplitCurve& curve,
                                               std::span<const std::pair<double, double>> y_pairs,
                                               std::size_t max_witnesses = 32);

struct DynamicNode {
  double y = 0.0;
  double min = 0.0;
  double max = 0.0;
  double tol = 0.0;
  Eigen::Index samples = 0;
};

struct DynamicResult {
  bool pass = true;
  /// min > 0 at every evaluated node.
  bool strict = true;
  std::vector<DynamicNode> nodes;
  /// Nodes skipped: tangential, or with no projected band sample inside X.
  int skipped = 0;
};

/// min / max of k'(y) - s_yy(x, y) over band samples of X(y, k(y)) projected
/// onto the level set. Admissible minimum: -(1e-4 * scale + |k' - FD(k)| +
/// |k'(eps) - k'(2 eps)| + largest one-cell change of s_yy at the samples).
/// Tangential nodes and nodes without projected band samples are skipped.
DynamicResult dynamic_criterion(const Model& model, const SplitCurve& curve, std::span<const std::size_t> node_ids);
DynamicResult dynamic_criterion(const Model& model, const SplitCurve& curve);

struct SplittingWitness {
  Vector x;
  std::vector<double> roots;
};

struct UniqueSplittingResult {
  bool pass = true;
  int probes_checked = 0;
  std::vector<SplittingWitness> witnesses;
};

/// Deterministic probe set: quadrature points drawn with the seed, half of
/// them boundary-adjacent when such points exist.
std::vector<Vector> splitting_probes(const Model& model, int count, std::uint64_t seed);

/// Counts sign changes of psi_x on the scanner grid for each probe; a probe
/// fails when it has more than one.
UniqueSplittingResult unique_splitting_check(const SplittingScanner& scanner, std::span<const Vector> probes);

struct TransversalityResult {
  double min = 1.0;
  double y_at_min = 0.0;
  Vector x_at_min;
};

/// Minimum of 1 - (n_X . n_=)^2 over boundary-adjacent band samples at the
/// given nodes (all nodes when empty). Throws NoBoundaryOracle.
TransversalityResult transversality_diagnostic(const Model& model, const SplitCurve& curve,
                                               std::span<const std::size_t> node_ids = {});

/// l = min of k' - s_yy over non-tangential nodes inside `region` and the
/// projected band samples there.
double speed_limit(const Model& model, const SplitCurve& curve, const TargetInterval& region);

/// Largest |F(x) - F(x')| / |x - x'| over `pairs` random close pairs of interior
/// points at distance `radius` (a fraction of the box scale when <= 0).
double sampled_map_lipschitz(const MatchSolution& solution, int pairs, std::uint64_t seed, double radius = 0.0);

struct NestednessOptions {
  int monotonicity_stride = 8;
  int probes = 200;
  std::uint64_t seed = 1;
};

struct NestednessReport {
  MonotonicityResult monotone;
  DynamicResult dynamic;
  UniqueSplittingResult unique_splitting;
  std::optional<TransversalityResult> transversality;
  double speed_limit = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> notes;
};

/// Runs the three criteria plus the diagnostics and combines them: nested when
/// all pass, non-nested on any failure witness, inconclusive otherwise.
NestednessReport assess_nestedness(const MatchSolution& solution, const NestednessOptions& options = {});

}  // namespace nestor
