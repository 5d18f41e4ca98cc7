#include "sloppykit/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "sloppykit/error.hpp"
#include "sloppykit/linalg.hpp"
#include "sloppykit/rng.hpp"
#include "parallel.hpp"

namespace sloppykit {

namespace {

// nll, its gradient and the Gauss-Newton / Fisher-scoring curvature at p.
struct LocalModel {
  double nll = kInf;
  Vector grad;
  Matrix curvature;
};

LocalModel local_model(const ModelInstance& model, const Vector& z0, const Vector& p, JacobianScheme scheme) {
  LocalModel lm;
  const Vector phi = evaluate(model, p);
  const Matrix j = jacobian(model, p, scheme);
  const double k = static_cast<double>(model.noise.replicates());
  if (model.noise.kind() == NoiseKind::Gaussian) {
    const double sk = std::sqrt(k);
    const Vector res = sk * model.noise.whiten(Vector(z0 - phi));
    const Matrix g = sk * model.noise.whiten(j);
    lm.nll = 0.5 * res.squaredNorm();
    lm.grad = -g.transpose() * res;
    lm.curvature = g.transpose() * g;
  } else {
    lm.nll = neg_log_likelihood(model, z0, p);
    lm.grad = Vector::Zero(p.size());
    lm.curvature = Matrix::Zero(p.size(), p.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      if (!(phi(i) > 0.0)) continue;
      const Vector row = j.row(i).transpose();
      lm.grad -= k * z0(i) / phi(i) * row;
      lm.curvature += k / phi(i) * row * row.transpose();
    }
  }
  return lm;
}

// Gradient with components removed where the box blocks descent.
Vector projected_gradient(const ParameterSpace& space, const Vector& p, const Vector& g) {
  Vector out = g;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool at_lower = p(i) <= space.lower(i) + kBoundSlack && g(i) > 0.0;
    const bool at_upper = p(i) >= space.upper(i) - kBoundSlack && g(i) < 0.0;
    if (at_lower || at_upper) out(i) = 0.0;
  }
  return out;
}

double safe_nll(const ModelInstance& model, const Vector& z0, const Vector& p) {
  try {
    return neg_log_likelihood(model, z0, p);
  } catch (const Error&) {
    return kInf;
  }
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
                           61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

std::vector<Vector> probe_directions(int r, int n) {
  std::vector<Vector> dirs;
  dirs.reserve(n);
  if (r == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
    return dirs;
  }
  if (r == 2) {
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n;
      Vector u(2);
      u << std::cos(t), std::sin(t);
      dirs.push_back(u);
    }
    return dirs;
  }
  for (int k = 0; k < n; ++k) {
    Vector u = halton(static_cast<std::uint64_t>(k) + 1, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      u(i) = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u(i) - 1.0);
    }
    dirs.push_back(u / u.norm());
  }
  return dirs;
}

}  // namespace

std::string_view to_string(FiberStop stop) noexcept {
  switch (stop) {
    case FiberStop::Steps: return "steps";
    case FiberStop::Boundary: return "boundary";
    case FiberStop::RankChange: return "rank_change";
    case FiberStop::EvaluationError: return "evaluation_error";
  }
  return "unknown";
}

EquivalenceVerdict test_equivalence(const ModelInstance& model, const Vector& p, const Vector& q, double tol) {
  const Vector a = evaluate(model, p);
  const Vector b = evaluate(model, q);
  EquivalenceVerdict v;
  v.residual = (a - b).cwiseAbs().maxCoeff();
  v.tolerance = tol > 0.0 ? tol : 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff());
  v.equivalent = v.residual <= v.tolerance;
  return v;
}

FiberTrace trace_fiber(const ModelInstance& model, const Vector& p0, const FiberOptions& options) {
  if (options.steps < 1 || !(options.step_size > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fiber steps and step_size must be positive");
  }
  const FimReport start = fim(model, p0, options.jacobian);
  if (start.class_dimension != 1) {
    throw Error(ErrorCode::WrongKernelDimension,
                "fiber tracing needs a one-dimensional kernel, found " + std::to_string(start.class_dimension));
  }
  const Vector phi0 = evaluate(model, p0);
  const double scale = std::max(1.0, phi0.cwiseAbs().maxCoeff());
  const int r = model.dim();

  FiberTrace trace;
  trace.seed = p0;
  trace.points.push_back(p0);
  Vector p = p0;
  Vector v = start.sloppiest_direction;
  FimReport here = start;

  for (int step = 0; step < options.steps; ++step) {
    Vector q = p + options.step_size * v;
    if (!model.space.contains(q, 0.0)) {
      trace.stop = FiberStop::Boundary;
      break;
    }
    // Basis of the complement of the kernel at the current point.
    const Matrix basis = here.eigen.eigenvectors.leftCols(r - 1);
    bool converged = false;
    bool failed = false;
    try {
      for (int it = 0; it <= options.corrector_iterations; ++it) {
        const Vector res = evaluate(model, q) - phi0;
        if (res.cwiseAbs().maxCoeff() <= options.corrector_tolerance * scale) {
          converged = true;
          break;
        }
        if (it == options.corrector_iterations) break;
        const Matrix jq = jacobian(model, q, options.jacobian.scheme, options.jacobian.step) * basis;
        const Vector c = lu_solve(jq.transpose() * jq, -(jq.transpose() * res));
        q += basis * c;
        if (!model.space.contains(q, 0.0)) {
          failed = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularSystem) throw Error(ErrorCode::CorrectorDivergence, e.what());
      trace.stop = FiberStop::EvaluationError;
      break;
    }
    if (failed) {
      trace.stop = FiberStop::Boundary;
      break;
    }
    if (!converged) {
      throw Error(ErrorCode::CorrectorDivergence,
                  "corrector did not return to the fiber after step " + std::to_string(step + 1));
    }
    trace.arc_length += (q - p).norm();
    trace.drift = std::max(trace.drift, (evaluate(model, q) - phi0).cwiseAbs().maxCoeff());
    trace.points.push_back(q);
    p = q;
    try {
      here = fim(model, p, options.jacobian);
    } catch (const Error&) {
      trace.stop = FiberStop::EvaluationError;
      break;
    }
    if (here.class_dimension != 1) {
      trace.stop = FiberStop::RankChange;
      break;
    }
    Vector next = here.sloppiest_direction;
    if (next.dot(v) < 0.0) next = -next;
    v = next;
  }
  return trace;
}

double neg_log_likelihood(const ModelInstance& model, const Vector& z0, const Vector& p) {
  const Vector phi = evaluate(model, p);
  if (z0.size() != phi.size()) throw Error(ErrorCode::DimensionMismatch, "data has wrong length");
  const double k = static_cast<double>(model.noise.replicates());
  if (model.noise.kind() == NoiseKind::Gaussian) {
    return 0.5 * k * model.noise.whiten(Vector(z0 - phi)).squaredNorm();
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (z0(i) == 0.0) continue;
    if (!(phi(i) > 0.0)) return kInf;
    sum -= z0(i) * std::log(phi(i));
  }
  return k * sum;
}

MleResult mle(const ModelInstance& model, const Vector& z0, const Vector& start, const MleOptions& options) {
  if (start.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "start has wrong length");
  if (!model.space.contains(start)) throw Error(ErrorCode::OutOfDomain, "start outside P");
  const int r = model.dim();
  MleResult out;
  out.start = start;
  Vector p = model.space.clip(start);
  LocalModel lm = local_model(model, z0, p, options.scheme);
  double lambda = 1e-3;
  // Running maximum of the curvature diagonal, as in MINPACK's scaling.
  Vector dscale = lm.curvature.diagonal().cwiseAbs();

  int it = 0;
  for (; it < options.max_iter; ++it) {
    const Vector pg = projected_gradient(model.space, p, lm.grad);
    out.gradient_norm = pg.norm();
    if (out.gradient_norm <= options.tolerance * std::max(1.0, std::abs(lm.nll))) {
      out.converged = true;
      break;
    }
    std::vector<int> free;
    for (int i = 0; i < r; ++i) {
      if (pg(i) != 0.0 || lm.grad(i) == 0.0) free.push_back(i);
    }
    const int nf = static_cast<int>(free.size());
    dscale = dscale.cwiseMax(lm.curvature.diagonal().cwiseAbs());
    const double floor = 1e-6 * std::max(dscale.maxCoeff(), 1e-300);
    Matrix h(nf, nf);
    Vector g(nf), damp(nf);
    for (int a = 0; a < nf; ++a) {
      g(a) = lm.grad(free[a]);
      damp(a) = std::max(dscale(free[a]), floor);
      for (int b = 0; b < nf; ++b) h(a, b) = lm.curvature(free[a], free[b]);
    }

    bool accepted = false;
    while (lambda < 1e16) {
      Matrix damped = h;
      for (int a = 0; a < nf; ++a) damped(a, a) += lambda * damp(a);
      Vector step;
      try {
        step = lu_solve(damped, -g);
      } catch (const Error&) {
        lambda *= 10.0;
        continue;
      }
      Vector trial = p;
      for (int a = 0; a < nf; ++a) trial(free[a]) += step(a);
      trial = model.space.clip(trial);
      const double value = safe_nll(model, z0, trial);
      if (value < lm.nll) {
        try {
          lm = local_model(model, z0, trial, options.scheme);
        } catch (const Error&) {
          lambda *= 10.0;
          continue;
        }
        p = trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No representable decrease: stop as converged if the undamped model
      // predicts a decrease below rounding level of the objective.
      double predicted = kInf;
      try {
        Matrix damped = h;
        for (int a = 0; a < nf; ++a) damped(a, a) += 1e-12 * damp(a);
        const Vector step = lu_solve(damped, -g);
        predicted = -g.dot(step) - 0.5 * step.dot(h * step);
      } catch (const Error&) {
      }
      if (std::abs(predicted) <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lm.nll))) {
        out.converged = true;
      }
      break;
    }
  }
  out.iterations = it;
  out.estimate = p;
  out.neg_log_likelihood = lm.nll;
  if (!out.converged) {
    out.gradient_norm = projected_gradient(model.space, p, lm.grad).norm();
    out.converged = out.gradient_norm <= options.tolerance * std::max(1.0, std::abs(lm.nll));
  }
  return out;
}

double likelihood_ratio_threshold(int r, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const boost::math::chi_squared dist(static_cast<double>(r));
  return 0.5 * boost::math::quantile(dist, 1.0 - alpha);
}

Vector halton(std::uint64_t index, int dim) {
  if (dim > static_cast<int>(std::size(kPrimes))) throw Error(ErrorCode::Unsupported, "Halton dimension too large");
  Vector out(dim);
  for (int d = 0; d < dim; ++d) {
    const double base = kPrimes[d];
    double f = 1.0, value = 0.0;
    for (std::uint64_t i = index; i > 0; i /= kPrimes[d]) {
      f /= base;
      value += f * static_cast<double>(i % kPrimes[d]);
    }
    out(d) = value;
  }
  return out;
}

ConfidenceAssessment assess_practical_identifiability(const ModelInstance& model, const Vector& z0,
                                                      const Vector& start, const ConfidenceOptions& options) {
  if (options.starts < 1) throw Error(ErrorCode::InvalidArgument, "starts must be positive");
  const int r = model.dim();
  ConfidenceAssessment out;
  out.z0 = z0;
  out.alpha = options.alpha;
  const double lr = likelihood_ratio_threshold(r, options.alpha);

  ParameterSpace box;
  if (options.start_box) {
    box = *options.start_box;
  } else {
    box.lower.resize(r);
    box.upper.resize(r);
    for (int i = 0; i < r; ++i) {
      const double w = 5.0 * std::max(1.0, std::abs(start(i)));
      box.lower(i) = std::max(model.space.lower(i), start(i) - w);
      box.upper(i) = std::min(model.space.upper(i), start(i) + w);
    }
  }
  std::vector<Vector> starts{start};
  for (int k = 1; k < options.starts; ++k) {
    const Vector u = halton(static_cast<std::uint64_t>(k), r);
    starts.push_back(model.space.clip(box.lower + u.cwiseProduct(box.upper - box.lower)));
  }
  out.starts.resize(starts.size());
  auto run_start = [&](int k) {
    try {
      out.starts[k] = mle(model, z0, starts[k], options.mle);
    } catch (const Error&) {
      out.starts[k].start = starts[k];
      out.starts[k].estimate = starts[k];
      out.starts[k].neg_log_likelihood = kInf;
      out.starts[k].converged = false;
    }
  };
  const int ns = static_cast<int>(starts.size());
  detail::for_each_index(ns, options.execution, run_start);

  int best = -1;
  for (int k = 0; k < ns; ++k) {
    if (!out.starts[k].converged) continue;
    if (best < 0 || out.starts[k].neg_log_likelihood < out.starts[best].neg_log_likelihood) best = k;
  }
  if (best < 0) throw Error(ErrorCode::MleFailure, "no maximum-likelihood start converged");
  out.estimate = out.starts[best].estimate;
  out.nll_at_estimate = out.starts[best].neg_log_likelihood;
  out.epsilon = out.nll_at_estimate + lr;

  const double r_max = options.probe.r_max.value_or(1e4 * (1.0 + out.estimate.norm()));
  const int n_dirs = options.probe.n_directions.value_or(r <= 3 ? 64 : 256);
  if (!(r_max > 0.0) || n_dirs < 1 || !(options.probe.growth > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "probe radius, direction count and growth must be positive");
  }
  out.probe_radius = r_max;
  const std::vector<Vector> dirs = probe_directions(r, n_dirs);
  out.n_directions = static_cast<int>(dirs.size());

  std::vector<double> radii;
  for (double rad = options.probe.first_radius * std::max(1.0, out.estimate.norm()); rad < r_max;
       rad *= options.probe.growth) {
    radii.push_back(rad);
  }
  radii.push_back(r_max);
  const Vector inv_sqrt_w = model.metric.sqrt_weights(r).cwiseInverse();

  std::vector<char> escapes(dirs.size(), 0);
  auto probe = [&](int k) {
    const Vector step = inv_sqrt_w.cwiseProduct(dirs[k]);
    if (!model.space.contains(out.estimate + r_max * step)) return;
    for (double rad : radii) {
      const Vector q = out.estimate + rad * step;
      if (!model.space.contains(q)) continue;
      if (!(safe_nll(model, z0, q) < out.epsilon)) return;
    }
    escapes[k] = 1;
  };
  const int nd = static_cast<int>(dirs.size());
  detail::for_each_index(nd, options.execution, probe);
  for (int k = 0; k < nd; ++k) {
    if (escapes[k]) out.escape_directions.push_back(dirs[k]);
  }
  out.bounded = out.escape_directions.empty();
  return out;
}

Vector draw_gaussian_data(const NoiseModel& noise, const Vector& phi, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector xi(phi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
  return phi + noise.cholesky_lower() * xi / std::sqrt(static_cast<double>(noise.replicates()));
}

CoverageResult simulate_coverage(const ModelInstance& model, const Vector& p0, double alpha, int trials,
                                 std::uint64_t seed, Execution execution) {
  if (trials < 1) throw Error(ErrorCode::InvalidTrialCount, "trials must be positive");
  if (model.noise.kind() != NoiseKind::Gaussian) {
    throw Error(ErrorCode::Unsupported, "coverage simulation needs Gaussian noise");
  }
  const double lr = likelihood_ratio_threshold(model.dim(), alpha);
  const Vector phi0 = evaluate(model, p0);
  std::vector<char> hit(trials, 0);
  auto run = [&](int k) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(k));
    const Vector z = draw_gaussian_data(model.noise, phi0, rng);
    const MleResult fit = mle(model, z, p0);
    hit[k] = neg_log_likelihood(model, z, p0) < fit.neg_log_likelihood + lr ? 1 : 0;
  };
  detail::for_each_index(trials, execution, run);
  CoverageResult out;
  out.trials = trials;
  for (char h : hit) out.covered += h;
  out.coverage = static_cast<double>(out.covered) / trials;
  out.standard_error = std::sqrt(alpha * (1.0 - alpha) / trials);
  return out;
}

}  // namespace sloppykit
