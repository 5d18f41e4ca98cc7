#include "sloppykit/model.hpp"

#include <cmath>

#include "sloppykit/error.hpp"
#include "sloppykit/linalg.hpp"

namespace sloppykit {

ParameterSpace ParameterSpace::unbounded(int dim) {
  return {Vector::Constant(dim, -kInf), Vector::Constant(dim, kInf)};
}

ParameterSpace ParameterSpace::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw Error(ErrorCode::DimensionMismatch, "bound vectors differ in length");
  }
  return {std::move(lower), std::move(upper)};
}

bool ParameterSpace::contains(const Vector& p, double slack) const {
  if (p.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= lower(i) - slack && p(i) <= upper(i) + slack)) return false;
  }
  return true;
}

Vector ParameterSpace::clip(const Vector& p) const {
  return p.cwiseMax(lower).cwiseMin(upper);
}

NoiseModel NoiseModel::gaussian(Matrix covariance, int replicates) {
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  NoiseModel n;
  n.kind_ = NoiseKind::Gaussian;
  n.replicates_ = replicates;
  n.covariance_ = std::move(covariance);
  const bool symmetric =
      n.covariance_.rows() == n.covariance_.cols() &&
      max_abs(n.covariance_ - n.covariance_.transpose()) <=
          1e-12 * std::max(1.0, max_abs(n.covariance_));
  if (symmetric) {
    try {
      n.chol_ = cholesky_factor(n.covariance_);
      n.factorized_ = true;
    } catch (const Error&) {
      n.factorized_ = false;
    }
  }
  return n;
}

NoiseModel NoiseModel::gaussian_identity(int dim, int replicates) {
  return gaussian(Matrix::Identity(dim, dim), replicates);
}

NoiseModel NoiseModel::categorical(int replicates) {
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  NoiseModel n;
  n.kind_ = NoiseKind::Categorical;
  n.replicates_ = replicates;
  n.factorized_ = true;
  return n;
}

const Matrix& NoiseModel::cholesky_lower() const {
  if (kind_ != NoiseKind::Gaussian) {
    throw Error(ErrorCode::Unsupported, "categorical noise has no covariance");
  }
  if (!factorized_) throw Error(ErrorCode::NotPositiveDefinite, "covariance did not factor");
  return chol_;
}

Vector NoiseModel::whiten(const Vector& x) const {
  return forward_substitute(cholesky_lower(), x);
}

Matrix NoiseModel::whiten(const Matrix& x) const {
  return forward_substitute(cholesky_lower(), x);
}

Vector ReferenceMetric::sqrt_weights(int dim) const {
  if (kind == Kind::Euclidean) return Vector::Ones(dim);
  if (weights.size() != dim) throw Error(ErrorCode::DimensionMismatch, "metric weights");
  return weights.cwiseSqrt();
}

std::pair<Vector, Vector> LpvSystem::split(const Vector& full) const {
  if (full.size() != param_dim + state_dim) {
    throw Error(ErrorCode::DimensionMismatch, "LPV parameter has wrong length");
  }
  return {full.head(param_dim), full.tail(state_dim)};
}

Matrix LpvSystem::hurwitz_matrix(const Vector& p) const {
  Matrix a = system_matrix(p);
  if (a.rows() != state_dim || a.cols() != state_dim) {
    throw Error(ErrorCode::DimensionMismatch, "A(p) has wrong shape");
  }
  const Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success || es.eigenvalues().real().maxCoeff() >= -1e-9) {
    throw Error(ErrorCode::NotHurwitz, "A(p) has an eigenvalue with real part >= -1e-9");
  }
  return a;
}

Vector evaluate(const ModelInstance& model, const Vector& p) {
  if (p.size() != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter has length " + std::to_string(p.size()) +
                                                  ", expected " + std::to_string(model.dim()));
  }
  if (!model.space.contains(p)) throw Error(ErrorCode::OutOfDomain, "parameter outside P");
  Vector out = model.prediction.eval(p);
  if (!out.allFinite()) throw Error(ErrorCode::NonFinite, model.name + " produced a non-finite value");
  return out;
}

JacobianResult fd_jacobian(const std::function<Vector(const Vector&)>& f,
                           const ParameterSpace& space, const Vector& p, double step) {
  const Eigen::Index r = p.size();
  std::optional<Vector> f0;
  auto center = [&]() -> const Vector& {
    if (!f0) f0 = f(p);
    return *f0;
  };
  auto try_eval = [&](const Vector& x) -> std::optional<Vector> {
    if (!space.contains(x, 0.0)) return std::nullopt;
    try {
      Vector y = f(x);
      if (!y.allFinite()) return std::nullopt;
      return y;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  JacobianResult out;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double h = step * std::max(1.0, std::abs(p(i)));
    Vector x = p;
    x(i) = p(i) + h;
    auto plus = try_eval(x);
    x(i) = p(i) - h;
    auto minus = try_eval(x);
    if (plus && minus) {
      const Vector col = (*plus - *minus) / (2.0 * h);
      if (out.value.size() == 0) out.value.resize(col.size(), r);
      out.value.col(i) = col;
      continue;
    }
    std::optional<Vector> col;
    if (plus) {
      x(i) = p(i) + 2.0 * h;
      if (auto plus2 = try_eval(x)) col = (-3.0 * center() + 4.0 * *plus - *plus2) / (2.0 * h);
    }
    if (!col && minus) {
      x(i) = p(i) - 2.0 * h;
      if (auto minus2 = try_eval(x)) col = (3.0 * center() - 4.0 * *minus + *minus2) / (2.0 * h);
    }
    if (!col) {
      throw Error(ErrorCode::OutOfDomain,
                  "finite-difference stencil for coordinate " + std::to_string(i) + " leaves P");
    }
    if (out.value.size() == 0) out.value.resize(col->size(), r);
    out.value.col(i) = *col;
    out.one_sided = true;
  }
  return out;
}

JacobianResult jacobian_detailed(const ModelInstance& model, const Vector& p,
                                 JacobianScheme scheme, double step) {
  if (p.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "jacobian: parameter length");
  if (!model.space.contains(p)) throw Error(ErrorCode::OutOfDomain, "jacobian: parameter outside P");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");

  const bool analytic = scheme == JacobianScheme::Analytic ||
                        (scheme == JacobianScheme::Auto && model.prediction.has_analytic_jacobian());
  if (analytic) {
    if (!model.prediction.has_analytic_jacobian()) {
      throw Error(ErrorCode::MissingAnalyticJacobian, model.name + " has no closed-form Jacobian");
    }
    JacobianResult out{model.prediction.jacobian(p), false};
    if (!out.value.allFinite()) throw Error(ErrorCode::NonFinite, "analytic Jacobian");
    return out;
  }
  auto f = [&model](const Vector& x) { return evaluate(model, x); };
  JacobianResult out = fd_jacobian(f, model.space, p, step);
  if (!out.value.allFinite()) throw Error(ErrorCode::NonFinite, "finite-difference Jacobian");
  return out;
}

Matrix jacobian(const ModelInstance& model, const Vector& p, JacobianScheme scheme, double step) {
  return jacobian_detailed(model, p, scheme, step).value;
}

Vector sample_interior(const ParameterSpace& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector p(space.dim());
  for (int i = 0; i < space.dim(); ++i) {
    double lo = space.lower(i);
    double hi = space.upper(i);
    if (std::isinf(lo) && std::isinf(hi)) {
      lo = -1.0;
      hi = 1.0;
    } else if (std::isinf(hi)) {
      hi = lo + 2.0;
    } else if (std::isinf(lo)) {
      lo = hi - 2.0;
    }
    const double pad = 1e-3 * (hi - lo);
    p(i) = lo + pad + (hi - lo - 2.0 * pad) * unit(rng);
  }
  return p;
}

ValidationReport validate(const ModelInstance& model) {
  ValidationReport report;
  auto violation = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  const auto& space = model.space;
  if (space.dim() < 1) violation("parameter space dimension must be >= 1");
  if (space.lower.size() != space.upper.size()) {
    violation("bound vectors differ in length");
    return report;
  }
  for (int i = 0; i < space.dim(); ++i) {
    if (!(space.lower(i) < space.upper(i))) {
      violation("lower bound not below upper bound at coordinate " + std::to_string(i));
    }
  }
  const auto& pm = model.prediction;
  if (pm.input_dim != space.dim()) violation("prediction input dimension differs from parameter dimension");
  if (pm.output_dim < 1) violation("prediction output dimension must be >= 1");
  if (!pm.eval) violation("prediction map has no evaluator");

  if (model.metric.kind == ReferenceMetric::Kind::WeightedEuclidean) {
    if (model.metric.weights.size() != space.dim()) violation("metric weights have wrong length");
    for (Eigen::Index i = 0; i < model.metric.weights.size(); ++i) {
      if (!(model.metric.weights(i) > 0.0)) violation("metric weights must be strictly positive");
    }
  }

  const auto& noise = model.noise;
  if (noise.replicates() < 1) violation("replicates must be >= 1");
  if (noise.kind() == NoiseKind::Gaussian) {
    const Matrix& cov = noise.covariance();
    if (cov.rows() != cov.cols()) {
      violation("covariance not square");
    } else {
      if (cov.rows() != pm.output_dim) violation("covariance dimension differs from output dimension");
      if (max_abs(cov - cov.transpose()) > 1e-12 * std::max(1.0, max_abs(cov))) {
        violation("covariance not symmetric");
      } else if (!noise.factorized()) {
        violation("covariance not positive definite");
      }
    }
  } else if (pm.eval && report.violations.empty()) {
    std::mt19937_64 rng(0x5107'9e11ULL);
    for (int k = 0; k < 100; ++k) {
      const Vector p = sample_interior(space, rng);
      Vector rho;
      try {
        rho = pm.eval(p);
      } catch (const Error& e) {
        violation(std::string("evaluation failed at an interior point: ") + e.what());
        break;
      }
      if (rho.size() != pm.output_dim) {
        violation("output has wrong length");
        break;
      }
      if (!rho.allFinite() || std::abs(rho.sum() - 1.0) > 1e-12 || rho.minCoeff() < -1e-14) {
        violation("output not on simplex");
        break;
      }
    }
  }
  return report;
}

}  // namespace sloppykit
