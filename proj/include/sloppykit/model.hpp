#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sloppykit/types.hpp"

namespace sloppykit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Membership slack absorbing optimizer round-off on closed bounds.
inline constexpr double kBoundSlack = 1e-12;

/// cbrt(machine epsilon): central-difference step balancing truncation
/// against rounding.
inline const double kDefaultFdStep = std::cbrt(std::numeric_limits<double>::epsilon());

/// Box P = prod [lower_i, upper_i] with extended-real bounds.
struct ParameterSpace {
  Vector lower;
  Vector upper;

  static ParameterSpace unbounded(int dim);
  static ParameterSpace box(Vector lower, Vector upper);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& p, double slack = kBoundSlack) const;
  /// Componentwise clamp into the box.
  Vector clip(const Vector& p) const;
};

struct PredictionMap {
  int input_dim = 0;
  int output_dim = 0;
  std::function<Vector(const Vector&)> eval;
  /// Closed-form N x r Jacobian; empty when the model has none.
  std::function<Matrix(const Vector&)> jacobian;

  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian); }
};

enum class NoiseKind { Gaussian, Categorical };

/// Law of the noisy data given phi(p): z ~ N(phi(p), Sigma) with K
/// replicates, or K repetitions of a categorical experiment whose cell
/// probabilities are phi(p).
class NoiseModel {
 public:
  static NoiseModel gaussian(Matrix covariance, int replicates = 1);
  static NoiseModel gaussian_identity(int dim, int replicates = 1);
  static NoiseModel categorical(int replicates = 1);

  NoiseKind kind() const { return kind_; }
  int replicates() const { return replicates_; }
  const Matrix& covariance() const { return covariance_; }
  /// False when the covariance failed to factor (reported by validate()).
  bool factorized() const { return factorized_; }
  const Matrix& cholesky_lower() const;

  /// L^{-1} x with Sigma = L L^T, so that |L^{-1} x|^2 = x^T Sigma^{-1} x.
  Vector whiten(const Vector& x) const;
  Matrix whiten(const Matrix& x) const;

 private:
  NoiseKind kind_ = NoiseKind::Gaussian;
  int replicates_ = 1;
  Matrix covariance_;
  Matrix chol_;
  bool factorized_ = false;
};

struct ReferenceMetric {
  enum class Kind { Euclidean, WeightedEuclidean };
  Kind kind = Kind::Euclidean;
  Vector weights;  // only for WeightedEuclidean

  static ReferenceMetric euclidean() { return {}; }
  static ReferenceMetric weighted(Vector w) { return {Kind::WeightedEuclidean, std::move(w)}; }

  /// sqrt(w_i), or ones for the Euclidean metric.
  Vector sqrt_weights(int dim) const;
};

/// x' = A(p) x, y = C x with parameter (p, x0). Only the LPV catalog entry
/// carries one of these.
struct LpvSystem {
  int param_dim = 0;
  int state_dim = 0;
  Matrix output;  // C, n x m
  std::function<Matrix(const Vector&)> system_matrix;  // p -> A(p)
  std::vector<double> timepoints;  // empty: only the continuous-data premetric is available

  /// Splits a full parameter into (p, x0).
  std::pair<Vector, Vector> split(const Vector& full) const;
  /// A(p), checked Hurwitz with margin 1e-9 (throws NotHurwitz).
  Matrix hurwitz_matrix(const Vector& p) const;
};

struct ModelInstance {
  std::string name;
  ParameterSpace space;
  PredictionMap prediction;
  NoiseModel noise;
  ReferenceMetric metric;
  std::shared_ptr<const LpvSystem> lpv;

  int dim() const { return space.dim(); }
};

/// phi(p). Throws OutOfDomain outside P and NonFinite on NaN/inf output.
Vector evaluate(const ModelInstance& model, const Vector& p);

enum class JacobianScheme { Analytic, CentralFd, Auto };

struct JacobianResult {
  Matrix value;
  bool one_sided = false;  // some coordinate fell back to a one-sided stencil
};

/// Finite-difference Jacobian of an arbitrary map on a box, with per
/// coordinate step h_i = step * max(1, |p_i|). Uses central differences when
/// the stencil stays in the box and the map evaluates there, otherwise
/// second-order one-sided differences.
JacobianResult fd_jacobian(const std::function<Vector(const Vector&)>& f,
                           const ParameterSpace& space, const Vector& p, double step);

JacobianResult jacobian_detailed(const ModelInstance& model, const Vector& p,
                                 JacobianScheme scheme = JacobianScheme::Auto,
                                 double step = kDefaultFdStep);

Matrix jacobian(const ModelInstance& model, const Vector& p,
                JacobianScheme scheme = JacobianScheme::Auto, double step = kDefaultFdStep);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const ModelInstance& model);

/// Uniform draw from the box. Infinite sides are replaced by a window of
/// width 2 next to the finite bound, or [-1, 1] when both are infinite; the
/// window is pulled inward by 1e-3 of its width.
Vector sample_interior(const ParameterSpace& space, std::mt19937_64& rng);

}  // namespace sloppykit
