#include "nestor/contour2d.hpp"

#include <array>
#include <cmath>

#include "nestor/error.hpp"

namespace nestor {

namespace {

using P2 = Eigen::Vector2d;

// Zero crossing of the linear interpolant along an edge.
P2 edge_point(const P2& p, double vp, const P2& q, double vq) {
  const double t = vp / (vp - vq);
  return p + t * (q - p);
}

struct Clipper {
  const Domain& dom;
  int& boundary_endpoints;
  std::vector<ContourPiece>& out;

  bool inside(const P2& p) const { return dom.inside(Eigen::Vector2d(p)); }

  P2 crossing(P2 in, P2 out_pt) const {
    for (int it = 0; it < 48; ++it) {
      const P2 mid = 0.5 * (in + out_pt);
      if (inside(mid)) in = mid; else out_pt = mid;
    }
    return 0.5 * (in + out_pt);
  }

  void clip(const P2& a, const P2& b) {
    constexpr int kSub = 4;
    std::array<P2, kSub + 1> pts;
    std::array<bool, kSub + 1> ins{};
    for (int s = 0; s <= kSub; ++s) {
      pts[static_cast<std::size_t>(s)] = a + (b - a) * (static_cast<double>(s) / kSub);
      ins[static_cast<std::size_t>(s)] = inside(pts[static_cast<std::size_t>(s)]);
    }
    bool open = ins[0];
    P2 start = a;
    for (int s = 1; s <= kSub; ++s) {
      const auto us = static_cast<std::size_t>(s);
      if (ins[us] == ins[us - 1]) continue;
      if (ins[us - 1]) {
        const P2 c = crossing(pts[us - 1], pts[us]);
        out.push_back({start, c});
        ++boundary_endpoints;
        open = false;
      } else {
        start = crossing(pts[us], pts[us - 1]);
        ++boundary_endpoints;
        open = true;
      }
    }
    if (open) out.push_back({start, b});
  }
};

}  // namespace

Contour2d extract_contour2d(const Model& model, double y, double k, int resolution) {
  if (model.dim() != 2) throw Error(ErrorKind::InvalidArgument, "contour extraction requires m = 2");
  const Domain& dom = model.domain();
  const Surplus& s = model.surplus();
  const int n = resolution > 0 ? resolution : model.quadrature().settings().resolution;
  const double hx = (dom.hi[0] - dom.lo[0]) / n;
  const double hy = (dom.hi[1] - dom.lo[1]) / n;

  const auto vertex = [&](int i, int j) { return P2(dom.lo[0] + i * hx, dom.lo[1] + j * hy); };
  std::vector<double> val(static_cast<std::size_t>((n + 1) * (n + 1)));
  const auto at = [&](int i, int j) -> double& { return val[static_cast<std::size_t>(i * (n + 1) + j)]; };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) at(i, j) = s.dy(Eigen::Vector2d(vertex(i, j)), y) - k;
  }

  Contour2d c;
  Clipper clipper{dom, c.boundary_endpoints, c.pieces};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Corners counter-clockwise: 0 (i,j), 1 (i+1,j), 2 (i+1,j+1), 3 (i,j+1).
      const std::array<P2, 4> p{vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)};
      std::array<double, 4> v{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      // Nudge exact zeros so every crossing lies strictly inside an edge.
      for (auto& vi : v) {
        if (vi == 0.0) vi = 1e-300;
      }
      int mask = 0;
      for (int q = 0; q < 4; ++q) {
        if (v[static_cast<std::size_t>(q)] > 0.0) mask |= 1 << q;
      }
      if (mask == 0 || mask == 15) continue;
      std::array<P2, 4> e;
      std::array<bool, 4> has{};
      for (int q = 0; q < 4; ++q) {
        const auto a = static_cast<std::size_t>(q);
        const auto b = static_cast<std::size_t>((q + 1) % 4);
        if ((v[a] > 0.0) != (v[b] > 0.0)) {
          e[a] = edge_point(p[a], v[a], p[b], v[b]);
          has[a] = true;
        }
      }
      if (mask == 5 || mask == 10) {
        // Saddle: connect according to the sign of the centre value.
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        const bool centre_pos = centre > 0.0;
        const bool corner0_pos = (mask & 1) != 0;
        if (centre_pos == corner0_pos) {
          clipper.clip(e[0], e[1]);
          clipper.clip(e[2], e[3]);
        } else {
          clipper.clip(e[3], e[0]);
          clipper.clip(e[1], e[2]);
        }
        continue;
      }
      std::array<P2, 2> ends;
      int found = 0;
      for (int q = 0; q < 4 && found < 2; ++q) {
        if (has[static_cast<std::size_t>(q)]) ends[static_cast<std::size_t>(found++)] = e[static_cast<std::size_t>(q)];
      }
      if (found == 2) clipper.clip(ends[0], ends[1]);
    }
  }
  for (const auto& piece : c.pieces) c.length += (piece.b - piece.a).norm();
  return c;
}

double contour_integral(const Contour2d& contour, const std::function<double(PointRef)>& integrand) {
  static const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double sum = 0.0;
  Eigen::VectorXd x(2);
  for (const auto& piece : contour.pieces) {
    const double len = (piece.b - piece.a).norm();
    if (len == 0.0) continue;
    for (int q = 0; q < 3; ++q) {
      x = piece.a + 0.5 * (1.0 + nodes[q]) * (piece.b - piece.a);
      sum += 0.5 * len * weights[q] * integrand(x);
    }
  }
  return sum;
}

}  // namespace nestor
