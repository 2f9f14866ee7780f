#include "nestor/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nestor/error.hpp"

namespace nestor {

std::string to_string(QuadratureMode mode) {
  return mode == QuadratureMode::TensorGrid ? "tensor-grid" : "monte-carlo";
}

QuadratureMode quadrature_mode_from_string(const std::string& s) {
  if (s == "tensor-grid") return QuadratureMode::TensorGrid;
  if (s == "monte-carlo") return QuadratureMode::MonteCarlo;
  throw Error(ErrorKind::InvalidArgument, "unknown quadrature mode '" + s + "'");
}

QuadratureSettings QuadratureSettings::defaults_for(int m) {
  QuadratureSettings q;
  switch (m) {
    case 1: q.resolution = 4096; break;
    case 2: q.resolution = 256; break;
    case 3: q.resolution = 64; break;
    default:
      q.mode = QuadratureMode::MonteCarlo;
      q.resolution = 1 << 18;
  }
  return q;
}

namespace {

std::vector<unsigned char> flag_boundary(const Domain& dom, const Matrix& pts, const Vector& h) {
  const int m = static_cast<int>(pts.rows());
  std::vector<unsigned char> flags(static_cast<std::size_t>(pts.cols()), 0);
  Vector probe(m);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    bool edge = false;
    for (int j = 0; j < m && !edge; ++j) {
      for (double sgn : {-1.0, 1.0}) {
        probe = pts.col(i);
        probe[j] += sgn * h[j];
        if (!dom.inside(probe)) {
          edge = true;
          break;
        }
      }
    }
    flags[static_cast<std::size_t>(i)] = edge ? 1 : 0;
  }
  return flags;
}

struct CutCell {
  double fraction = 0.0;
  Vector centroid;
};

/// Inside fraction and inside centroid of the grid cell with lower corner
/// `corner`. Cells whose corners and centre agree are taken as whole; cut
/// cells are resolved on a sub-grid of about 256 points.
CutCell cut_cell(const Domain& dom, const Vector& corner, const Vector& h) {
  const int m = static_cast<int>(corner.size());
  CutCell c;
  c.centroid = corner + 0.5 * h;
  const bool centre = dom.inside(c.centroid);
  bool mixed = false;
  Vector p(m);
  for (int mask = 0; mask < (1 << m) && !mixed; ++mask) {
    for (int j = 0; j < m; ++j) p[j] = corner[j] + ((mask >> j) & 1) * h[j];
    mixed = dom.inside(p) != centre;
  }
  if (!mixed) {
    c.fraction = centre ? 1.0 : 0.0;
    return c;
  }
  const int s = m == 1 ? 256 : m == 2 ? 16 : 6;
  const int total = static_cast<int>(std::lround(std::pow(s, m)));
  Vector sum = Vector::Zero(m);
  std::vector<Vector> hits;
  for (int t = 0; t < total; ++t) {
    int r = t;
    for (int j = 0; j < m; ++j) {
      p[j] = corner[j] + ((r % s) + 0.5) / s * h[j];
      r /= s;
    }
    if (dom.inside(p)) {
      sum += p;
      hits.push_back(p);
    }
  }
  c.fraction = static_cast<double>(hits.size()) / total;
  if (hits.empty()) return c;
  c.centroid = sum / static_cast<double>(hits.size());
  if (!dom.inside(c.centroid)) {
    const Vector mean = c.centroid;
    c.centroid = *std::min_element(hits.begin(), hits.end(), [&](const Vector& a, const Vector& b) {
      return (a - mean).squaredNorm() < (b - mean).squaredNorm();
    });
  }
  return c;
}

}  // namespace

Quadrature Quadrature::build(const Domain& dom, const QuadratureSettings& settings) {
  dom.validate();
  if (settings.resolution <= 0) throw Error(ErrorKind::InvalidArgument, "quadrature resolution must be positive");
  const int m = dom.dim;
  const Vector extent = dom.hi - dom.lo;
  Quadrature q;
  q.settings_ = settings;

  std::vector<double> coords;
  std::vector<double> fractions;
  Vector x(m);
  double cell_volume = 0.0;

  if (settings.mode == QuadratureMode::TensorGrid) {
    const int n = settings.resolution;
    q.spacing_ = extent / static_cast<double>(n);
    cell_volume = q.spacing_.prod();
    const double total = std::pow(static_cast<double>(n), m);
    if (total > 5e8) throw Error(ErrorKind::InvalidArgument, "tensor grid too large");
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    // Lexicographic sweep with the last axis fastest gives a fixed point order.
    for (;;) {
      for (int j = 0; j < m; ++j) x[j] = dom.lo[j] + idx[static_cast<std::size_t>(j)] * q.spacing_[j];
      const CutCell cell = cut_cell(dom, x, q.spacing_);
      if (cell.fraction > 0.0) {
        coords.insert(coords.end(), cell.centroid.data(), cell.centroid.data() + m);
        fractions.push_back(cell.fraction);
      }
      int j = m - 1;
      while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == n) {
        idx[static_cast<std::size_t>(j)] = 0;
        --j;
      }
      if (j < 0) break;
    }
  } else {
    const int n = settings.resolution;
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    cell_volume = dom.box_volume() / n;
    q.spacing_ = extent * std::pow(1.0 / n, 1.0 / m);
    for (int s = 0; s < n; ++s) {
      for (int j = 0; j < m; ++j) x[j] = dom.lo[j] + unit(rng) * extent[j];
      if (dom.inside(x)) coords.insert(coords.end(), x.data(), x.data() + m);
    }
  }

  const Eigen::Index count = static_cast<Eigen::Index>(coords.size()) / m;
  if (count == 0) throw Error(ErrorKind::EmptyDomain, "no interior quadrature points");
  q.points_ = Eigen::Map<const Matrix>(coords.data(), m, count);
  q.weights_ = Array::Constant(count, cell_volume);
  if (!fractions.empty()) q.weights_ *= Eigen::Map<const Array>(fractions.data(), count);
  q.volume_ = q.weights_.sum();
  q.boundary_ = flag_boundary(dom, q.points_, q.spacing_);
  return q;
}

}  // namespace nestor
