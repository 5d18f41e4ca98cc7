#pragma once

#include <cstdint>
#include <vector>

#include "sloppykit/model.hpp"
#include "sloppykit/premetric.hpp"

namespace sloppykit {

struct SpherePoint {
  Vector direction;  // unit vector in metric coordinates
  double radius = 0.0;
  Vector point;      // p0 + radius * W^{-1/2} direction
  bool feasible = false;
  double value = 0.0;  // d(point, p0)
};

struct DeltaOptions {
  int starts = 16;  // random starts, on top of the two FIM eigen-direction starts
  std::uint64_t seed = 0;
  int max_iter = 500;
  double fd_step = kDefaultFdStep;
  Execution execution = Execution::Parallel;
};

struct DeltaEntry {
  double delta = 0.0;
  double sup_d = 0.0;
  double inf_d = 0.0;
  double ratio = 0.0;  // sup_d / inf_d; +inf when inf_d is 0
  SpherePoint max_disruptive;
  SpherePoint min_disruptive;
  std::vector<SpherePoint> local_maxima;  // distinct by angle > 1e-3
  std::vector<SpherePoint> local_minima;
  bool empty_sphere = false;      // every start was abandoned
  int abandoned = 0;
  bool infinite_excluded = false;  // some +inf values were left out of the inf search
};

struct DeltaSloppinessCurve {
  Vector p0;
  std::vector<DeltaEntry> entries;
  int starts_used = 0;
};

/// Sup and inf of d(., p0) over {p in P : d_P(p, p0) = delta} for each delta,
/// by multi-start projected gradient on the sphere.
DeltaSloppinessCurve delta_sloppiness(const ModelInstance& model, const Vector& p0,
                                      const std::vector<double>& deltas, const DeltaOptions& options = {});

/// Point on the sphere of radius delta about the origin, inside the box
/// [lower, upper], obtained from y by clipping and rescaling the free part.
/// Returns false when the active-set iteration finds no such point.
bool project_sphere_box(Vector& y, double delta, const Vector& lower, const Vector& upper);

struct GridAxis {
  int index = 0;
  double lo = 0.0;
  double hi = 1.0;
  int resolution = 2;

  double coord(int k) const { return lo + (hi - lo) * k / (resolution - 1); }
  double spacing() const { return (hi - lo) / (resolution - 1); }
};

/// d(grid point, p0) (or its square root) on a Cartesian slice through p0.
/// NaN marks grid points outside P or where the model fails to evaluate.
struct LevelSetGrid {
  GridAxis x;
  GridAxis y;
  Matrix values;  // values(i, j) at (x.coord(i), y.coord(j))
  bool sqrt_mode = false;
  Vector p0;

  Vector point(int i, int j) const;
};

LevelSetGrid level_set_grid(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y,
                            bool sqrt_mode, Execution execution = Execution::Parallel);

struct Polyline {
  std::vector<Eigen::Vector2d> vertices;
  bool closed = false;
};

/// Marching squares per level; cells touching a NaN are skipped.
std::vector<std::vector<Polyline>> contour_polylines(const LevelSetGrid& grid, const std::vector<double>& levels);

}  // namespace sloppykit
