#include "sloppykit/reference.hpp"

#include <cmath>
#include <numbers>

#include "sloppykit/error.hpp"

namespace sloppykit {
namespace detail {
void check_grid_axes(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y);
double grid_value(const PremetricEvaluator& d, const LevelSetGrid& grid, int i, int j);
}  // namespace detail

namespace reference {

LevelSetGrid level_set_grid(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y,
                            bool sqrt_mode) {
  detail::check_grid_axes(model, p0, x, y);
  LevelSetGrid grid;
  grid.x = x;
  grid.y = y;
  grid.sqrt_mode = sqrt_mode;
  grid.p0 = p0;
  grid.values.resize(x.resolution, y.resolution);
  const PremetricEvaluator d(model, p0);
  for (int i = 0; i < x.resolution; ++i) {
    for (int j = 0; j < y.resolution; ++j) grid.values(i, j) = detail::grid_value(d, grid, i, j);
  }
  return grid;
}

SphereSweep sphere_sweep(const ModelInstance& model, const Vector& p0, double delta, int n_angles) {
  if (model.dim() != 2) throw Error(ErrorCode::Unsupported, "sphere sweep needs two parameters");
  if (n_angles < 1) throw Error(ErrorCode::InvalidArgument, "n_angles must be positive");
  const PremetricEvaluator d(model, p0);
  const Vector inv = model.metric.sqrt_weights(2).cwiseInverse();
  SphereSweep out;
  auto visit = [&](double t) {
    Vector u(2);
    u << std::cos(t), std::sin(t);
    const Vector p = p0 + delta * inv.cwiseProduct(u);
    if (!model.space.contains(p)) return;
    double v;
    try {
      v = d(model.space.clip(p));
    } catch (const Error&) {
      return;
    }
    ++out.feasible;
    if (out.sup_point.size() == 0 || v > out.sup_d) {
      out.sup_d = v;
      out.sup_point = p;
    }
    if (out.inf_point.size() == 0 || v < out.inf_d) {
      out.inf_d = v;
      out.inf_point = p;
    }
  };
  for (int k = 0; k < n_angles; ++k) visit(2.0 * std::numbers::pi * k / n_angles);
  // Extrema often sit where the circle meets the box; sample those exactly.
  for (int i = 0; i < 2; ++i) {
    for (double bound : {model.space.lower(i), model.space.upper(i)}) {
      if (!std::isfinite(bound)) continue;
      const double c = (bound - p0(i)) / (delta * inv(i));
      if (std::abs(c) > 1.0) continue;
      const double a = i == 0 ? std::acos(c) : std::asin(c);
      if (i == 0) {
        visit(a);
        visit(-a);
      } else {
        visit(a);
        visit(std::numbers::pi - a);
      }
    }
  }
  return out;
}

}  // namespace reference
}  // namespace sloppykit
