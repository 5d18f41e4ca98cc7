#include "sloppykit/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "sloppykit/error.hpp"
#include "sloppykit/fim.hpp"
#include "sloppykit/linalg.hpp"
#include "sloppykit/reference.hpp"
#include "sloppykit/rng.hpp"

namespace sloppykit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kArmijo = 1e-4;
constexpr double kMaxAngle = 0.5;
constexpr double kMinAngle = 1e-12;
constexpr double kGradTol = 1e-9;
constexpr double kDistinctAngle = 1e-3;

// d(., p0) restricted to the metric sphere of radius delta, in the unit
// direction u of metric coordinates y = W^{1/2}(p - p0) = delta u.
class SphereProblem {
 public:
  SphereProblem(const PremetricEvaluator& d, const Vector& sqrt_w, double delta, double fd_step)
      : d_(d), sqrt_w_(sqrt_w), delta_(delta), fd_step_(fd_step) {
    const ParameterSpace& space = d.model().space;
    lower_ = sqrt_w.cwiseProduct(space.lower - d.p0());
    upper_ = sqrt_w.cwiseProduct(space.upper - d.p0());
  }

  // Moves u onto sphere and box; false when that fails.
  bool project(Vector& u) const {
    Vector y = delta_ * u;
    if (!project_sphere_box(y, delta_, lower_, upper_)) return false;
    u = y / delta_;
    return true;
  }

  Vector point(const Vector& u) const {
    return d_.model().space.clip(d_.p0() + delta_ * u.cwiseQuotient(sqrt_w_));
  }

  double value(const Vector& u) const {
    try {
      return d_(point(u));
    } catch (const Error&) {
      return kNaN;
    }
  }

  // Gradient of u -> d(point(u)) projected on the tangent space and with
  // components pushing out of the box removed.
  Vector tangential_gradient(const Vector& u, double sign) const {
    const ModelInstance& model = d_.model();
    const auto f = [this](const Vector& p) { return Vector::Constant(1, d_(p)).eval(); };
    Vector g;
    try {
      g = fd_jacobian(f, model.space, point(u), fd_step_).value.row(0).transpose();
    } catch (const Error&) {
      return Vector();
    }
    g = sign * delta_ * g.cwiseQuotient(sqrt_w_);
    const Vector y = delta_ * u;
    Vector active = Vector::Zero(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double tol = 1e-12 * std::max(1.0, delta_);
      if ((y(i) <= lower_(i) + tol && g(i) < 0.0) || (y(i) >= upper_(i) - tol && g(i) > 0.0)) active(i) = 1.0;
    }
    Vector free_u = u;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (active(i) != 0.0) {
        g(i) = 0.0;
        free_u(i) = 0.0;
      }
    }
    const double nu = free_u.squaredNorm();
    if (nu > 0.0) g -= (g.dot(free_u) / nu) * free_u;
    return g;
  }

  SpherePoint sphere_point(const Vector& u, double value) const {
    SpherePoint sp;
    sp.direction = u;
    sp.radius = delta_;
    sp.point = point(u);
    sp.feasible = d_.model().space.contains(sp.point);
    sp.value = value;
    return sp;
  }

 private:
  const PremetricEvaluator& d_;
  Vector sqrt_w_;
  Vector lower_;
  Vector upper_;
  double delta_;
  double fd_step_;
};

struct StartOutcome {
  bool abandoned = true;
  bool has_max = false;
  bool has_min = false;
  bool excluded_infinite = false;
  SpherePoint max_point;
  SpherePoint min_point;
};

// Projected gradient ascent (sign = +1) or descent (sign = -1) along great
// circles with Armijo backtracking.
SpherePoint climb(const SphereProblem& problem, Vector u, double f, double sign, int max_iter) {
  double theta = kMaxAngle;
  for (int it = 0; it < max_iter; ++it) {
    if (std::isinf(f)) break;
    const Vector g = problem.tangential_gradient(u, sign);
    if (g.size() == 0 || !g.allFinite()) break;
    const double gn = g.norm();
    if (gn <= kGradTol * std::abs(f)) break;
    const Vector t = g / gn;
    bool accepted = false;
    while (theta >= kMinAngle) {
      Vector trial = std::cos(theta) * u + std::sin(theta) * t;
      if (problem.project(trial)) {
        const double ft = problem.value(trial);
        if (!std::isnan(ft) && sign * (ft - f) >= kArmijo * theta * gn) {
          u = trial;
          f = ft;
          theta = std::min(2.0 * theta, kMaxAngle);
          accepted = true;
          break;
        }
      }
      theta *= 0.5;
    }
    if (!accepted) break;
  }
  return problem.sphere_point(u, f);
}

void add_distinct(std::vector<SpherePoint>& list, const SpherePoint& sp) {
  for (const auto& other : list) {
    const double c = std::clamp(other.direction.dot(sp.direction), -1.0, 1.0);
    if (std::acos(c) <= kDistinctAngle) return;
  }
  list.push_back(sp);
}

}  // namespace

bool project_sphere_box(Vector& y, double delta, const Vector& lower, const Vector& upper) {
  const Eigen::Index r = y.size();
  std::vector<char> fixed(r, 0);
  Vector z = y;
  for (Eigen::Index pass = 0; pass <= r; ++pass) {
    double fixed_sq = 0.0;
    double free_sq = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (fixed[i]) {
        fixed_sq += z(i) * z(i);
      } else {
        free_sq += z(i) * z(i);
      }
    }
    const double remaining = delta * delta - fixed_sq;
    if (remaining < -1e-14 * delta * delta) return false;
    if (free_sq == 0.0) {
      if (remaining > 1e-14 * delta * delta) return false;
      y = z;
      return true;
    }
    const double scale = std::sqrt(std::max(remaining, 0.0) / free_sq);
    bool clipped = false;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (fixed[i]) continue;
      z(i) *= scale;
      if (z(i) < lower(i)) {
        z(i) = lower(i);
        fixed[i] = 1;
        clipped = true;
      } else if (z(i) > upper(i)) {
        z(i) = upper(i);
        fixed[i] = 1;
        clipped = true;
      }
    }
    if (!clipped) {
      y = z;
      return true;
    }
  }
  return false;
}

DeltaSloppinessCurve delta_sloppiness(const ModelInstance& model, const Vector& p0,
                                      const std::vector<double>& deltas, const DeltaOptions& options) {
  if (deltas.empty()) throw Error(ErrorCode::InvalidArgument, "deltas must be non-empty");
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0) || !std::isfinite(deltas[k]) || (k > 0 && !(deltas[k] > deltas[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "deltas must be positive and increasing");
    }
  }
  if (options.starts < 0 || options.max_iter < 1) {
    throw Error(ErrorCode::InvalidArgument, "starts must be >= 0 and max_iter positive");
  }
  if (!model.space.contains(p0)) throw Error(ErrorCode::OutOfDomain, "p0 outside P");

  const int r = model.dim();
  const PremetricEvaluator d(model, p0);
  const Vector sqrt_w = model.metric.sqrt_weights(r);

  // Stiffest and sloppiest directions of the FIM in metric coordinates.
  std::vector<Vector> eigen_starts;
  try {
    const FimReport report = fim(model, p0);
    const Vector inv = sqrt_w.cwiseInverse();
    const Matrix scaled = inv.asDiagonal() * report.fim * inv.asDiagonal();
    const SymmetricEigen eig = sym_eigen(scaled);
    eigen_starts.push_back(canonical_sign(eig.eigenvectors.col(0)));
    eigen_starts.push_back(canonical_sign(eig.eigenvectors.col(r - 1)));
  } catch (const Error&) {
  }

  DeltaSloppinessCurve curve;
  curve.p0 = p0;
  const int det = static_cast<int>(eigen_starts.size());
  const int total = det + options.starts;
  curve.starts_used = total;

  for (std::size_t di = 0; di < deltas.size(); ++di) {
    const double delta = deltas[di];
    const SphereProblem problem(d, sqrt_w, delta, options.fd_step);
    std::vector<StartOutcome> outcomes(total);

    auto run_start = [&](int k) {
      Vector u;
      if (k < det) {
        u = eigen_starts[k];
      } else {
        auto rng = make_stream(options.seed, di, static_cast<std::uint64_t>(k));
        std::normal_distribution<double> normal;
        u.resize(r);
        for (int i = 0; i < r; ++i) u(i) = normal(rng);
        u /= u.norm();
      }
      StartOutcome& out = outcomes[k];
      if (!problem.project(u)) return;
      const double f = problem.value(u);
      if (std::isnan(f)) return;
      out.abandoned = false;
      out.max_point = climb(problem, u, f, 1.0, options.max_iter);
      out.has_max = true;
      if (std::isinf(f)) {
        out.excluded_infinite = true;
        return;
      }
      out.min_point = climb(problem, u, f, -1.0, options.max_iter);
      out.has_min = true;
    };
    detail::for_each_index(total, options.execution, run_start);

    DeltaEntry entry;
    entry.delta = delta;
    bool have_max = false, have_min = false;
    for (const auto& out : outcomes) {
      if (out.abandoned) {
        ++entry.abandoned;
        continue;
      }
      entry.infinite_excluded = entry.infinite_excluded || out.excluded_infinite;
      if (out.has_max) {
        add_distinct(entry.local_maxima, out.max_point);
        if (!have_max || out.max_point.value > entry.max_disruptive.value) entry.max_disruptive = out.max_point;
        have_max = true;
      }
      if (out.has_min) {
        add_distinct(entry.local_minima, out.min_point);
        if (!have_min || out.min_point.value < entry.min_disruptive.value) entry.min_disruptive = out.min_point;
        have_min = true;
      }
    }
    entry.empty_sphere = entry.abandoned == total;
    entry.sup_d = have_max ? entry.max_disruptive.value : kNaN;
    entry.inf_d = have_min ? entry.min_disruptive.value : (have_max ? kInf : kNaN);
    if (!have_max) {
      entry.ratio = kNaN;
    } else if (entry.inf_d > 0.0) {
      entry.ratio = entry.sup_d / entry.inf_d;
    } else {
      entry.ratio = kInf;
    }
    curve.entries.push_back(std::move(entry));
  }
  return curve;
}

Vector LevelSetGrid::point(int i, int j) const {
  Vector p = p0;
  p(x.index) = x.coord(i);
  p(y.index) = y.coord(j);
  return p;
}

namespace detail {

void check_grid_axes(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y) {
  const int r = model.dim();
  if (p0.size() != r) throw Error(ErrorCode::DimensionMismatch, "p0 has wrong length");
  for (const GridAxis* a : {&x, &y}) {
    if (a->index < 0 || a->index >= r) throw Error(ErrorCode::InvalidArgument, "grid axis index out of range");
    if (a->resolution < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 2");
    if (!(a->lo < a->hi) || !std::isfinite(a->lo) || !std::isfinite(a->hi)) {
      throw Error(ErrorCode::InvalidArgument, "grid range must satisfy lo < hi");
    }
  }
  if (x.index == y.index) throw Error(ErrorCode::InvalidArgument, "grid axes must differ");
}

double grid_value(const PremetricEvaluator& d, const LevelSetGrid& grid, int i, int j) {
  const Vector p = grid.point(i, j);
  if (!d.model().space.contains(p, 0.0)) return kNaN;
  double v;
  try {
    v = d(p);
  } catch (const Error&) {
    return kNaN;
  }
  return grid.sqrt_mode ? std::sqrt(v) : v;
}

}  // namespace detail

LevelSetGrid level_set_grid(const ModelInstance& model, const Vector& p0, const GridAxis& x, const GridAxis& y,
                            bool sqrt_mode, Execution execution) {
  if (execution == Execution::Serial) return reference::level_set_grid(model, p0, x, y, sqrt_mode);
  detail::check_grid_axes(model, p0, x, y);
  LevelSetGrid grid;
  grid.x = x;
  grid.y = y;
  grid.sqrt_mode = sqrt_mode;
  grid.p0 = p0;
  grid.values.resize(x.resolution, y.resolution);
  const PremetricEvaluator d(model, p0);
  const int nx = x.resolution;
  const int ny = y.resolution;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) grid.values(i, j) = detail::grid_value(d, grid, i, j);
  }
  return grid;
}

}  // namespace sloppykit
