#pragma once

#include <array>
#include <cmath>

#include "nestor/types.hpp"

namespace nestor {

/// Smoothed distribution of a linear function over one quadrature cell.
///
/// A function with gradient g sampled at a cell centre takes values
/// centre + sum_j U_j over the cell, U_j uniform on [-a_j/2, a_j/2] with
/// a_j = |g_j| h_j. The three widest components are kept (widths below 1e-2 of
/// the widest are dropped). For m >= 2 one more uniform of the widest width is
/// added, so sums of fractions over a grid are C^1 in the level even when g is
/// aligned with an axis (many cells then share one centre level).
struct CellSpread {
  std::array<double, 4> width{0.0, 0.0, 0.0, 0.0};
  int count = 0;
  double half = 0.0;       // half of the kernel support
  double cell_half = 0.0;  // half of the range of the linear function over the cell
};

CellSpread make_cell_spread(PointRef gradient, const Vector& spacing);

/// Fraction of the kernel mass below centre + t.
inline double cell_fraction_below(double t, const CellSpread& c) {
  double shifted = t + c.half;
  if (shifted <= 0.0) return c.count == 0 && t >= 0.0 ? 1.0 : 0.0;
  if (shifted >= 2.0 * c.half) return 1.0;
  // Evaluate on the lower half of the symmetric support to limit cancellation.
  const bool flip = shifted > c.half;
  if (flip) shifted = 2.0 * c.half - shifted;
  const int n = c.count;
  double sum = 0.0;
  double norm = 1.0;
  for (int j = 0; j < n; ++j) norm *= (j + 1) * c.width[static_cast<std::size_t>(j)];
  for (int mask = 0; mask < (1 << n); ++mask) {
    double z = shifted;
    int bits = 0;
    for (int j = 0; j < n; ++j) {
      if ((mask >> j) & 1) {
        z -= c.width[static_cast<std::size_t>(j)];
        ++bits;
      }
    }
    if (z <= 0.0) continue;
    double p = z;
    for (int j = 1; j < n; ++j) p *= z;
    sum += (bits & 1) ? -p : p;
  }
  const double below = sum / norm;
  return flip ? 1.0 - below : below;
}

/// Fraction of the cell where the function lies in (centre + lo, centre + hi).
inline double cell_fraction_between(double lo, double hi, const CellSpread& c) {
  if (c.count == 0) return (lo < 0.0 && 0.0 < hi) ? 1.0 : 0.0;
  return cell_fraction_below(hi, c) - cell_fraction_below(lo, c);
}

}  // namespace nestor
