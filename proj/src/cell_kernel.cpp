#include "nestor/cell_kernel.hpp"

#include <algorithm>

namespace nestor {

CellSpread make_cell_spread(PointRef gradient, const Vector& spacing) {
  CellSpread c;
  const int m = static_cast<int>(gradient.size());
  std::array<double, 3> top{0.0, 0.0, 0.0};
  for (int j = 0; j < m; ++j) {
    double w = std::abs(gradient[j]) * spacing[j];
    // Insert into the descending top-3 list.
    for (int s = 0; s < 3; ++s) {
      if (w > top[static_cast<std::size_t>(s)]) std::swap(w, top[static_cast<std::size_t>(s)]);
    }
  }
  const double cutoff = 1e-2 * top[0];
  for (double w : top) {
    if (w > cutoff && w > 0.0) c.width[static_cast<std::size_t>(c.count++)] = w;
  }
  for (int s = 0; s < c.count; ++s) c.cell_half += 0.5 * c.width[static_cast<std::size_t>(s)];
  c.half = c.cell_half;
  if (m > 1 && c.count > 0) {
    c.width[static_cast<std::size_t>(c.count++)] = top[0];
    c.half += 0.5 * top[0];
  }
  return c;
}

}  // namespace nestor
