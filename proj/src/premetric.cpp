#include "sloppykit/premetric.hpp"

#include <cmath>

#include "sloppykit/error.hpp"
#include "sloppykit/linalg.hpp"

namespace sloppykit {

namespace {

constexpr double kProbabilityFloor = 1e-300;

bool is_continuous_lpv(const ModelInstance& model) {
  return model.lpv && model.lpv->timepoints.empty();
}

}  // namespace

std::string_view to_string(PremetricKind kind) noexcept {
  switch (kind) {
    case PremetricKind::GaussianKl: return "gaussian_kl";
    case PremetricKind::CategoricalKl: return "categorical_kl";
    case PremetricKind::L2Continuous: return "l2_continuous";
  }
  return "unknown";
}

namespace detail {

double gaussian_kl(const NoiseModel& noise, const Vector& phi, const Vector& phi0) {
  const Vector w = noise.whiten(Vector(phi - phi0));
  const double q = w.squaredNorm();
  return (0.5 * q) * static_cast<double>(noise.replicates());
}

double categorical_kl(int replicates, const Vector& rho, const Vector& rho0) {
  if (rho.size() != rho0.size()) throw Error(ErrorCode::DimensionMismatch, "probability vectors");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const double a = rho(i) < kProbabilityFloor ? 0.0 : rho(i);
    const double b = rho0(i) < kProbabilityFloor ? 0.0 : rho0(i);
    if (a == 0.0) continue;
    if (b == 0.0) return kInf;
    sum += a * std::log(a / b);
  }
  const double value = static_cast<double>(replicates) * sum;
  return value < 0.0 ? 0.0 : value;
}

}  // namespace detail

PremetricValue d_gaussian(const ModelInstance& model, const Vector& p, const Vector& p0) {
  if (model.noise.kind() != NoiseKind::Gaussian) {
    throw Error(ErrorCode::Unsupported, "d_gaussian needs Gaussian noise");
  }
  return {detail::gaussian_kl(model.noise, evaluate(model, p), evaluate(model, p0)),
          PremetricKind::GaussianKl};
}

PremetricValue d_categorical(const ModelInstance& model, const Vector& p, const Vector& p0) {
  if (model.noise.kind() != NoiseKind::Categorical) {
    throw Error(ErrorCode::Unsupported, "d_categorical needs categorical noise");
  }
  return {detail::categorical_kl(model.noise.replicates(), evaluate(model, p), evaluate(model, p0)),
          PremetricKind::CategoricalKl};
}

PremetricValue d_infinity(const ModelInstance& model, const Vector& pa, const Vector& pb) {
  if (!model.lpv) throw Error(ErrorCode::Unsupported, "d_infinity needs an LPV model");
  const LpvSystem& sys = *model.lpv;
  const auto [p, x0] = sys.split(pa);
  const auto [q, y0] = sys.split(pb);
  const int m = sys.state_dim;
  const Matrix a = sys.hurwitz_matrix(p);
  const Matrix b = sys.hurwitz_matrix(q);

  Matrix abar = Matrix::Zero(2 * m, 2 * m);
  abar.topLeftCorner(m, m) = a;
  abar.bottomRightCorner(m, m) = b;
  Matrix cbar(sys.output.rows(), 2 * m);
  cbar << sys.output, -sys.output;
  Vector xbar(2 * m);
  xbar << x0, y0;

  const Matrix gram = lyapunov_solve(abar, cbar.transpose() * cbar);
  const double value = xbar.dot(gram * xbar);
  return {value < 0.0 ? 0.0 : value, PremetricKind::L2Continuous};
}

PremetricValue premetric(const ModelInstance& model, const Vector& p, const Vector& p0) {
  if (is_continuous_lpv(model)) return d_infinity(model, p, p0);
  if (model.noise.kind() == NoiseKind::Categorical) return d_categorical(model, p, p0);
  return d_gaussian(model, p, p0);
}

double d_reference(const ReferenceMetric& metric, const Vector& p, const Vector& p0) {
  if (p.size() != p0.size()) throw Error(ErrorCode::DimensionMismatch, "points differ in length");
  const Vector s = metric.sqrt_weights(static_cast<int>(p.size()));
  return s.cwiseProduct(p - p0).norm();
}

PremetricEvaluator::PremetricEvaluator(const ModelInstance& model, Vector p0)
    : model_(&model), p0_(std::move(p0)) {
  if (is_continuous_lpv(model)) {
    kind_ = PremetricKind::L2Continuous;
    model.lpv->hurwitz_matrix(model.lpv->split(p0_).first);
  } else {
    kind_ = model.noise.kind() == NoiseKind::Categorical ? PremetricKind::CategoricalKl
                                                          : PremetricKind::GaussianKl;
    phi0_ = evaluate(model, p0_);
  }
}

double PremetricEvaluator::operator()(const Vector& p) const {
  switch (kind_) {
    case PremetricKind::GaussianKl:
      return detail::gaussian_kl(model_->noise, evaluate(*model_, p), phi0_);
    case PremetricKind::CategoricalKl:
      return detail::categorical_kl(model_->noise.replicates(), evaluate(*model_, p), phi0_);
    case PremetricKind::L2Continuous:
      return d_infinity(*model_, p, p0_).value;
  }
  return 0.0;
}

}  // namespace sloppykit
