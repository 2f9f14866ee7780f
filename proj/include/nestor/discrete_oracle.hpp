#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "nestor/model.hpp"
#include "nestor/types.hpp"

namespace nestor {

class MatchSolution;

/// Finite transport instance. `surplus(i, j) = s(x_i, y_j)`.
struct DiscreteInstance {
  Matrix source_points;  // m x n
  Vector source_weights;
  Vector target_points;
  Vector target_weights;
  Matrix surplus;

  Eigen::Index n_source() const { return source_weights.size(); }
  Eigen::Index n_target() const { return target_weights.size(); }
  /// Throws InvalidArgument unless weights are positive and sum to one.
  void validate() const;
};

struct PlanEntry {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double mass = 0.0;
};

/// Optimal basic plan with dual potentials (u_i + v_j >= S_ij).
struct DiscretePlan {
  std::vector<PlanEntry> entries;
  Vector u;
  Vector v;
  double objective = 0.0;
  int pivots = 0;

  double dual_objective(const DiscreteInstance& inst) const;
  /// Largest marginal error over rows and columns.
  double marginal_error(const DiscreteInstance& inst) const;
  /// max_ij S_ij - u_i - v_j (<= 0 when feasible).
  double max_dual_violation(const DiscreteInstance& inst) const;
  /// max |u_i + v_j - S_ij| over the support.
  double slackness_error(const DiscreteInstance& inst) const;
};

/// Atoms from a model: sources by recursive mass-median bisection of the
/// quadrature points into n_source strata (atom = weighted centroid, snapped
/// to the nearest member when it falls outside X, weight = stratum mass);
/// targets at the midpoints of n_target equal-mass quantile bins of g.
/// The seed orders ties and is recorded for reproducibility.
DiscreteInstance sample_instance(const Model& model, int n_source, int n_target, std::uint64_t seed);

/// Instance from explicit atoms and a surplus matrix.
DiscreteInstance make_instance(Matrix source_points, Vector source_weights, Vector target_points,
                               Vector target_weights, Matrix surplus);

/// Maximises sum gamma_ij S_ij by the transportation simplex: northwest-corner
/// start, MODI potentials, Bland's rule for the entering cell and the leaving
/// cell. Sizes are capped at 5000 x 500.
DiscretePlan solve_transport(const DiscreteInstance& inst);

struct MapComparison {
  double surplus_gap = 0.0;
  double dual_gap = 0.0;
  /// Additive shift c applied as v + c, u - c.
  double shift = 0.0;
};

/// Relative surplus gap between the plan and the map coupling, and the largest
/// deviation between the oracle duals and (u, v) at the atoms after the best
/// single additive shift.
MapComparison compare_with_map(const MatchSolution& solution, const DiscreteInstance& inst, const DiscretePlan& plan);

/// Largest gain sum S(x_i, y_sigma(i)) - sum S(x_i, y_i) over cyclic
/// reassignments of 2 or 3 support cells (all pairs and `triples` sampled
/// triples).
double cyclical_monotonicity_audit(const DiscretePlan& plan, const Matrix& surplus, int cycle_length = 3,
                                   int triples = 20000, std::uint64_t seed = 1);

nlohmann::json to_json(const DiscreteInstance& inst);
nlohmann::json to_json(const DiscretePlan& plan);
DiscreteInstance instance_from_json(const nlohmann::json& j);
DiscretePlan plan_from_json(const nlohmann::json& j);

}  // namespace nestor
