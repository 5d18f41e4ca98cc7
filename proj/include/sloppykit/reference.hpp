#pragma once

#include "sloppykit/multiscale.hpp"

// Serial reference implementations used to check the optimized kernels.
namespace sloppykit::reference {

LevelSetGrid level_set_grid(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y,
                            bool sqrt_mode);

struct SphereSweep {
  double sup_d = 0.0;
  double inf_d = kInf;
  Vector sup_point;
  Vector inf_point;
  int feasible = 0;
};

/// Evaluates d(., p0) at n equally spaced angles on the metric circle of
/// radius delta (two-parameter models only).
SphereSweep sphere_sweep(const ModelInstance& model, const Vector& p0, double delta, int n_angles);

}  // namespace sloppykit::reference
