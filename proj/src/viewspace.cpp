#include "veram/viewspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "veram/errors.hpp"

namespace veram {

GridIndex to_grid(Location l, GridShape grid) {
  // floor(x + 1/2) rounds halves up, matching file-driven replays exactly.
  int row = static_cast<int>(std::floor(l.r * grid.rows + 0.5));
  int col = static_cast<int>(std::floor(l.c * grid.cols + 0.5));
  return {std::clamp(row, 1, grid.rows), std::clamp(col, 1, grid.cols)};
}

Location cell_center(GridIndex g, GridShape grid) {
  return {static_cast<double>(g.row) / grid.rows, static_cast<double>(g.col) / grid.cols};
}

double clamp_coord(double x, double lo) { return std::clamp(x, lo, 1.0); }

Location clamp_location(double r, double c, GridShape grid) {
  return {clamp_coord(r, grid.lo_r()), clamp_coord(c, grid.lo_c())};
}

Location sample_location(Location mean, double delta, Rng& rng, GridShape grid) {
  if (delta <= 0) throw UsageError("sample_location: delta must be positive, got " + std::to_string(delta));
  double r = rng.normal(mean.r, delta);
  double c = rng.normal(mean.c, delta);
  return clamp_location(r, c, grid);
}

double pair_distance(Location a, Location b, bool toroidal, GridShape grid) {
  double dr = std::abs(a.r - b.r);
  double dc = std::abs(a.c - b.c);
  if (toroidal) {
    dr = std::min(dr, 1.0 - dr);  // views wrap every full turn
    dc = std::min(dc, 1.0 - dc);
    (void)grid;
  }
  return std::sqrt(dr * dr + dc * dc);
}

double boundary_sign(double u, double l, bool correct, double lo, double hi) {
  if (correct) return 1.0;
  if (l == lo && u < l) return -1.0;
  if (l == hi && u > l) return -1.0;
  return 1.0;
}

double gauss_logpdf_grad(double u, double l, double delta) {
  if (delta <= 0) throw UsageError("gauss_logpdf_grad: delta must be positive");
  return (l - u) / (delta * delta);
}

}  // namespace veram
