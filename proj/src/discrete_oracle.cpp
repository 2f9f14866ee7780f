#include "nestor/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "nestor/error.hpp"
#include "nestor/nested_solver.hpp"

namespace nestor {

void DiscreteInstance::validate() const {
  const auto check = [](const Vector& w, const char* what) {
    if (w.size() == 0) throw Error(ErrorKind::InvalidArgument, std::string(what) + " has no atoms");
    if ((w.array() <= 0.0).any()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " weights must be positive");
    if (std::abs(w.sum() - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, std::string(what) + " weights must sum to 1");
  };
  check(source_weights, "source");
  check(target_weights, "target");
  if (surplus.rows() != n_source() || surplus.cols() != n_target()) {
    throw Error(ErrorKind::InvalidArgument, "surplus matrix shape does not match the atoms");
  }
  if (source_points.cols() != 0 && source_points.cols() != n_source()) {
    throw Error(ErrorKind::InvalidArgument, "source points do not match the source weights");
  }
  if (target_points.size() != 0 && target_points.size() != n_target()) {
    throw Error(ErrorKind::InvalidArgument, "target points do not match the target weights");
  }
}

double DiscretePlan::dual_objective(const DiscreteInstance& inst) const {
  return u.dot(inst.source_weights) + v.dot(inst.target_weights);
}

double DiscretePlan::marginal_error(const DiscreteInstance& inst) const {
  Vector rows = Vector::Zero(inst.n_source());
  Vector cols = Vector::Zero(inst.n_target());
  for (const auto& e : entries) {
    rows[e.i] += e.mass;
    cols[e.j] += e.mass;
  }
  return std::max((rows - inst.source_weights).cwiseAbs().maxCoeff(), (cols - inst.target_weights).cwiseAbs().maxCoeff());
}

double DiscretePlan::max_dual_violation(const DiscreteInstance& inst) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < inst.n_source(); ++i) {
    for (Eigen::Index j = 0; j < inst.n_target(); ++j) worst = std::max(worst, inst.surplus(i, j) - u[i] - v[j]);
  }
  return worst;
}

double DiscretePlan::slackness_error(const DiscreteInstance& inst) const {
  double worst = 0.0;
  for (const auto& e : entries) {
    if (e.mass > 0.0) worst = std::max(worst, std::abs(u[e.i] + v[e.j] - inst.surplus(e.i, e.j)));
  }
  return worst;
}

DiscreteInstance make_instance(Matrix source_points, Vector source_weights, Vector target_points,
                               Vector target_weights, Matrix surplus) {
  DiscreteInstance inst{std::move(source_points), std::move(source_weights), std::move(target_points),
                        std::move(target_weights), std::move(surplus)};
  inst.validate();
  return inst;
}

namespace {

struct Stratum {
  std::vector<Eigen::Index> ids;
  int count = 1;
};

void split_strata(const Quadrature& quad, const Array& mw, Stratum s, std::vector<Stratum>& out) {
  if (s.count <= 1 || s.ids.size() <= 1) {
    out.push_back(std::move(s));
    return;
  }
  const int m = quad.dim();
  Vector lo = Vector::Constant(m, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (const auto i : s.ids) {
    lo = lo.cwiseMin(Vector(quad.point(i)));
    hi = hi.cwiseMax(Vector(quad.point(i)));
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  std::stable_sort(s.ids.begin(), s.ids.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return quad.point(a)[axis] < quad.point(b)[axis]; });
  const int left_count = s.count / 2;
  double total = 0.0;
  for (const auto i : s.ids) total += mw[i];
  const double want = total * left_count / s.count;
  double acc = 0.0;
  std::size_t cut = 0;
  while (cut < s.ids.size() && acc + 0.5 * mw[s.ids[cut]] < want) acc += mw[s.ids[cut++]];
  cut = std::clamp<std::size_t>(cut, 1, s.ids.size() - 1);
  Stratum left{std::vector<Eigen::Index>(s.ids.begin(), s.ids.begin() + static_cast<std::ptrdiff_t>(cut)), left_count};
  Stratum right{std::vector<Eigen::Index>(s.ids.begin() + static_cast<std::ptrdiff_t>(cut), s.ids.end()),
                s.count - left_count};
  split_strata(quad, mw, std::move(left), out);
  split_strata(quad, mw, std::move(right), out);
}

}  // namespace

DiscreteInstance sample_instance(const Model& model, int n_source, int n_target, std::uint64_t seed) {
  if (n_source < 1 || n_target < 1) throw Error(ErrorKind::InvalidArgument, "atom counts must be positive");
  const auto& quad = model.quadrature();
  const Array& mw = model.mass_weights();
  if (n_source > quad.size()) throw Error(ErrorKind::InvalidArgument, "more source atoms than quadrature points");
  Stratum root;
  root.ids.resize(static_cast<std::size_t>(quad.size()));
  std::iota(root.ids.begin(), root.ids.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(root.ids.begin(), root.ids.end(), rng);
  root.count = n_source;
  std::vector<Stratum> strata;
  split_strata(quad, mw, std::move(root), strata);

  const int m = model.dim();
  const auto ns = static_cast<Eigen::Index>(strata.size());
  Matrix xs(m, ns);
  Vector ws(ns);
  for (Eigen::Index a = 0; a < ns; ++a) {
    const auto& st = strata[static_cast<std::size_t>(a)];
    Vector c = Vector::Zero(m);
    double w = 0.0;
    for (const auto i : st.ids) {
      c += mw[i] * quad.point(i);
      w += mw[i];
    }
    c /= w;
    if (!model.domain().inside(c)) {
      Eigen::Index best = st.ids.front();
      for (const auto i : st.ids) {
        if ((quad.point(i) - c).squaredNorm() < (quad.point(best) - c).squaredNorm()) best = i;
      }
      c = quad.point(best);
    }
    xs.col(a) = c;
    ws[a] = w;
  }
  ws /= ws.sum();

  Vector ys(n_target);
  for (int j = 0; j < n_target; ++j) ys[j] = model.target_quantile((j + 0.5) / n_target);
  const Vector wt = Vector::Constant(n_target, 1.0 / n_target);
  Matrix S(ns, n_target);
  for (Eigen::Index a = 0; a < ns; ++a) {
    for (int j = 0; j < n_target; ++j) S(a, j) = model.surplus().value(xs.col(a), ys[j]);
  }
  return make_instance(std::move(xs), std::move(ws), std::move(ys), wt, std::move(S));
}

// ---------------------------------------------------------------------------
// Transportation simplex

namespace {

struct Basic {
  Eigen::Index i;
  Eigen::Index j;
  double mass;
};

class TreeSimplex {
 public:
  TreeSimplex(const DiscreteInstance& inst) : S_(inst.surplus), n_(inst.n_source()), m_(inst.n_target()) {
    Vector a = inst.source_weights;
    Vector b = inst.target_weights;
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    while (i < n_ && j < m_) {
      const double q = std::min(a[i], b[j]);
      basis_.push_back({i, j, q});
      a[i] -= q;
      b[j] -= q;
      const bool row_done = a[i] <= b[j];
      if ((row_done && i + 1 < n_) || j + 1 == m_) ++i;
      else ++j;
    }
    tol_ = 1e-12 * std::max(1.0, S_.cwiseAbs().maxCoeff());
  }

  int run() {
    int pivots = 0;
    for (;;) {
      build_tree();
      potentials();
      Eigen::Index ei = -1;
      Eigen::Index ej = -1;
      for (Eigen::Index i = 0; i < n_ && ei < 0; ++i) {
        for (Eigen::Index j = 0; j < m_; ++j) {
          if (S_(i, j) - u_[i] - v_[j] > tol_) {
            ei = i;
            ej = j;
            break;
          }
        }
      }
      if (ei < 0) return pivots;
      pivot(ei, ej);
      ++pivots;
    }
  }

  const std::vector<Basic>& basis() const { return basis_; }
  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }

 private:
  // Nodes 0..n-1 are rows, n..n+m-1 columns; edges are basic cells.
  void build_tree() {
    adj_.assign(static_cast<std::size_t>(n_ + m_), {});
    for (std::size_t c = 0; c < basis_.size(); ++c) {
      adj_[static_cast<std::size_t>(basis_[c].i)].push_back(c);
      adj_[static_cast<std::size_t>(n_ + basis_[c].j)].push_back(c);
    }
  }

  Eigen::Index other(std::size_t cell, Eigen::Index node) const {
    const Basic& b = basis_[cell];
    return node < n_ ? n_ + b.j : b.i;
  }

  void potentials() {
    u_ = Vector::Zero(n_);
    v_ = Vector::Zero(m_);
    std::vector<char> seen(static_cast<std::size_t>(n_ + m_), 0);
    std::vector<Eigen::Index> stack;
    for (Eigen::Index start = 0; start < n_ + m_; ++start) {
      if (seen[static_cast<std::size_t>(start)]) continue;
      seen[static_cast<std::size_t>(start)] = 1;
      stack.push_back(start);
      while (!stack.empty()) {
        const Eigen::Index node = stack.back();
        stack.pop_back();
        for (const std::size_t c : adj_[static_cast<std::size_t>(node)]) {
          const Eigen::Index nb = other(c, node);
          if (seen[static_cast<std::size_t>(nb)]) continue;
          seen[static_cast<std::size_t>(nb)] = 1;
          const Basic& b = basis_[c];
          if (nb >= n_) v_[b.j] = S_(b.i, b.j) - u_[b.i];
          else u_[b.i] = S_(b.i, b.j) - v_[b.j];
          stack.push_back(nb);
        }
      }
    }
  }

  // Tree path from column node of ej back to row node of ei, as cell indices.
  std::vector<std::size_t> path(Eigen::Index ei, Eigen::Index ej) const {
    const auto total = static_cast<std::size_t>(n_ + m_);
    std::vector<std::ptrdiff_t> via(total, -1);
    std::vector<char> seen(total, 0);
    std::vector<Eigen::Index> queue{n_ + ej};
    seen[static_cast<std::size_t>(n_ + ej)] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Eigen::Index node = queue[head];
      if (node == ei) break;
      for (const std::size_t c : adj_[static_cast<std::size_t>(node)]) {
        const Eigen::Index nb = other(c, node);
        if (seen[static_cast<std::size_t>(nb)]) continue;
        seen[static_cast<std::size_t>(nb)] = 1;
        via[static_cast<std::size_t>(nb)] = static_cast<std::ptrdiff_t>(c);
        queue.push_back(nb);
      }
    }
    std::vector<std::size_t> cells;
    for (Eigen::Index node = ei; node != n_ + ej;) {
      const auto c = static_cast<std::size_t>(via[static_cast<std::size_t>(node)]);
      cells.push_back(c);
      node = other(c, node);
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
  }

  void pivot(Eigen::Index ei, Eigen::Index ej) {
    // Cells along the path from column ej to row ei alternate -, +, ..., -.
    const auto cells = path(ei, ej);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = cells.front();
    for (std::size_t q = 0; q < cells.size(); q += 2) {
      const Basic& b = basis_[cells[q]];
      const Basic& l = basis_[leave];
      const bool smaller = b.mass < theta;
      const bool tie_lower = b.mass == theta && (b.i * m_ + b.j) < (l.i * m_ + l.j);
      if (smaller || tie_lower) {
        theta = b.mass;
        leave = cells[q];
      }
    }
    for (std::size_t q = 0; q < cells.size(); ++q) basis_[cells[q]].mass += (q % 2 == 0 ? -theta : theta);
    basis_[leave] = {ei, ej, theta};
    // The leaving cell is exactly zero; clear rounding on the other minus cells.
    for (std::size_t q = 0; q < cells.size(); q += 2) {
      if (cells[q] != leave && basis_[cells[q]].mass < 0.0) basis_[cells[q]].mass = 0.0;
    }
  }

  const Matrix& S_;
  Eigen::Index n_;
  Eigen::Index m_;
  double tol_ = 1e-12;
  std::vector<Basic> basis_;
  std::vector<std::vector<std::size_t>> adj_;
  Vector u_;
  Vector v_;
};

}  // namespace

DiscretePlan solve_transport(const DiscreteInstance& inst) {
  inst.validate();
  if (inst.n_source() > 5000 || inst.n_target() > 500) {
    throw Error(ErrorKind::InvalidArgument, "instance exceeds the 5000 x 500 size cap");
  }
  TreeSimplex simplex(inst);
  DiscretePlan plan;
  plan.pivots = simplex.run();
  plan.u = simplex.u();
  plan.v = simplex.v();
  for (const auto& b : simplex.basis()) {
    plan.entries.push_back({b.i, b.j, b.mass});
    plan.objective += b.mass * inst.surplus(b.i, b.j);
  }
  std::sort(plan.entries.begin(), plan.entries.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  return plan;
}

MapComparison compare_with_map(const MatchSolution& solution, const DiscreteInstance& inst, const DiscretePlan& plan) {
  const Model& model = solution.model();
  const Surplus& s = model.surplus();
  MapComparison out;
  double map_value = 0.0;
  double a_min = std::numeric_limits<double>::infinity();
  double a_max = -a_min;
  for (Eigen::Index i = 0; i < inst.n_source(); ++i) {
    const auto x = inst.source_points.col(i);
    map_value += inst.source_weights[i] * s.value(x, solution.map(x));
    const double a = plan.u[i] - solution.u(x);
    a_min = std::min(a_min, a);
    a_max = std::max(a_max, a);
  }
  double b_min = std::numeric_limits<double>::infinity();
  double b_max = -b_min;
  for (Eigen::Index j = 0; j < inst.n_target(); ++j) {
    const double b = plan.v[j] - solution.v(inst.target_points[j]);
    b_min = std::min(b_min, b);
    b_max = std::max(b_max, b);
  }
  out.surplus_gap = (plan.objective - map_value) / std::max(std::abs(plan.objective), 1e-300);
  // Errors a_i + c and b_j - c; the max is minimised where the two envelopes meet.
  const double up = std::max(a_max, -b_min);
  const double down = std::max(-a_min, b_max);
  out.shift = 0.5 * (down - up);
  out.dual_gap = 0.5 * (up + down);
  return out;
}

double cyclical_monotonicity_audit(const DiscretePlan& plan, const Matrix& surplus, int cycle_length, int triples,
                                   std::uint64_t seed) {
  std::vector<PlanEntry> sup;
  for (const auto& e : plan.entries) {
    if (e.mass > 0.0) sup.push_back(e);
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < sup.size(); ++a) {
    for (std::size_t b = a + 1; b < sup.size(); ++b) {
      const auto& p = sup[a];
      const auto& q = sup[b];
      const double gain = surplus(p.i, q.j) + surplus(q.i, p.j) - surplus(p.i, p.j) - surplus(q.i, q.j);
      worst = std::max(worst, gain);
    }
  }
  if (cycle_length >= 3 && sup.size() >= 3) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, sup.size() - 1);
    for (int t = 0; t < triples; ++t) {
      const auto& p = sup[pick(rng)];
      const auto& q = sup[pick(rng)];
      const auto& r = sup[pick(rng)];
      const double base = surplus(p.i, p.j) + surplus(q.i, q.j) + surplus(r.i, r.j);
      worst = std::max(worst, surplus(p.i, q.j) + surplus(q.i, r.j) + surplus(r.i, p.j) - base);
      worst = std::max(worst, surplus(p.i, r.j) + surplus(q.i, p.j) + surplus(r.i, q.j) - base);
    }
  }
  return sup.size() < 2 ? 0.0 : worst;
}

nlohmann::json to_json(const DiscreteInstance& inst) {
  nlohmann::json j;
  j["source_points"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < inst.source_points.cols(); ++c) {
    const Vector x = inst.source_points.col(c);
    j["source_points"].push_back(std::vector<double>(x.data(), x.data() + x.size()));
  }
  j["source_weights"] = std::vector<double>(inst.source_weights.data(), inst.source_weights.data() + inst.n_source());
  j["target_points"] = std::vector<double>(inst.target_points.data(), inst.target_points.data() + inst.target_points.size());
  j["target_weights"] = std::vector<double>(inst.target_weights.data(), inst.target_weights.data() + inst.n_target());
  j["surplus"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < inst.surplus.rows(); ++r) {
    const Vector row = inst.surplus.row(r).transpose();
    j["surplus"].push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return j;
}

nlohmann::json to_json(const DiscretePlan& plan) {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : plan.entries) j["entries"].push_back({e.i, e.j, e.mass});
  j["u"] = std::vector<double>(plan.u.data(), plan.u.data() + plan.u.size());
  j["v"] = std::vector<double>(plan.v.data(), plan.v.data() + plan.v.size());
  j["objective"] = plan.objective;
  j["pivots"] = plan.pivots;
  return j;
}

namespace {

Vector to_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix rows_to_matrix(const nlohmann::json& j, bool transpose) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix M(r, c);
  for (Eigen::Index a = 0; a < r; ++a) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)].size()) != c) {
      throw Error(ErrorKind::InvalidArgument, "ragged matrix in JSON");
    }
    for (Eigen::Index b = 0; b < c; ++b) M(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
  return transpose ? Matrix(M.transpose()) : M;
}

}  // namespace

DiscreteInstance instance_from_json(const nlohmann::json& j) {
  return make_instance(rows_to_matrix(j.at("source_points"), true), to_vector(j.at("source_weights")),
                       to_vector(j.at("target_points")), to_vector(j.at("target_weights")),
                       rows_to_matrix(j.at("surplus"), false));
}

DiscretePlan plan_from_json(const nlohmann::json& j) {
  DiscretePlan plan;
  for (const auto& e : j.at("entries")) plan.entries.push_back({e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>(), e.at(2).get<double>()});
  plan.u = to_vector(j.at("u"));
  plan.v = to_vector(j.at("v"));
  plan.objective = j.at("objective").get<double>();
  plan.pivots = j.value("pivots", 0);
  return plan;
}

}  // namespace nestor
