#pragma once

#include "veram/rng.hpp"

namespace veram {

/// Normalized view coordinates. The camera grid's R x C cells map to
/// coordinates {1/R..1} x {1/C..1}; the learning space is the box
/// [1/R, 1] x [1/C, 1] and a Location always lies inside it.
struct Location {
  double r = 0;
  double c = 0;
};

/// 1-based discrete grid cell.
struct GridIndex {
  int row = 0;
  int col = 0;
  bool operator==(const GridIndex&) const = default;
};

struct GridShape {
  int rows = 12;
  int cols = 12;
  double lo_r() const { return 1.0 / rows; }
  double lo_c() const { return 1.0 / cols; }
  bool is_border(GridIndex g) const {
    return g.row == 1 || g.row == rows || g.col == 1 || g.col == cols;
  }
  int cell_count() const { return rows * cols; }
};

/// Nearest-cell lookup; ties round toward +inf, result clamped into range.
GridIndex to_grid(Location l, GridShape grid = {});

/// Center coordinate of a cell (the exact preimage of to_grid).
Location cell_center(GridIndex g, GridShape grid = {});

double clamp_coord(double x, double lo);
Location clamp_location(double r, double c, GridShape grid = {});

/// Per-coordinate Gaussian draw N(u, delta^2), clamped into the view box.
/// The clamped value is the viewpoint actually used downstream, so
/// gradients are taken at it.
Location sample_location(Location mean, double delta, Rng& rng, GridShape grid = {});

/// Euclidean in normalized coordinates by default; the wrap-around metric
/// is available for experimentation but the learning space is treated as a
/// bounded box.
double pair_distance(Location a, Location b, bool toroidal = false, GridShape grid = {});

/// Gradient-direction correction at the view-space boundary. +1 whenever
/// the shape was classified correctly; otherwise -1 exactly when the
/// clamped coordinate sits on a boundary and the estimate overshoots it.
double boundary_sign(double u, double l, bool correct, double lo = 1.0 / 12.0, double hi = 1.0);

/// d/du of ln N(l; u, delta^2) = (l - u) / delta^2.
double gauss_logpdf_grad(double u, double l, double delta);

}  // namespace veram
