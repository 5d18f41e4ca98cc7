#pragma once

#include "sloppykit/model.hpp"

namespace sloppykit {

enum class PremetricKind { GaussianKl, CategoricalKl, L2Continuous };

std::string_view to_string(PremetricKind kind) noexcept;

struct PremetricValue {
  double value = 0.0;  // +inf when absolute continuity fails (categorical)
  PremetricKind kind = PremetricKind::GaussianKl;
};

/// (K/2) <dphi, Sigma^{-1} dphi> with dphi = phi(p) - phi(p0).
PremetricValue d_gaussian(const ModelInstance& model, const Vector& p, const Vector& p0);

/// K sum_i rho_i(p) log(rho_i(p) / rho_i(p0)), 0 log(0/x) = 0.
PremetricValue d_categorical(const ModelInstance& model, const Vector& p, const Vector& p0);

/// Integral over [0, inf) of |y(t; pa) - y(t; pb)|^2 for an LPV model,
/// through the Lyapunov equation of the augmented system.
PremetricValue d_infinity(const ModelInstance& model, const Vector& pa, const Vector& pb);

/// Dispatches on the noise kind; LPV models without timepoints use d_infinity.
PremetricValue premetric(const ModelInstance& model, const Vector& p, const Vector& p0);

double d_reference(const ReferenceMetric& metric, const Vector& p, const Vector& p0);

/// d(., p0) with phi(p0) evaluated once. Used by the optimizers and grids.
class PremetricEvaluator {
 public:
  PremetricEvaluator(const ModelInstance& model, Vector p0);

  double operator()(const Vector& p) const;
  PremetricKind kind() const { return kind_; }
  const Vector& p0() const { return p0_; }
  const ModelInstance& model() const { return *model_; }

 private:
  const ModelInstance* model_;
  Vector p0_;
  Vector phi0_;
  PremetricKind kind_;
};

namespace detail {
double gaussian_kl(const NoiseModel& noise, const Vector& phi, const Vector& phi0);
double categorical_kl(int replicates, const Vector& rho, const Vector& rho0);
}  // namespace detail

}  // namespace sloppykit
