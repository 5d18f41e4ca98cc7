#pragma once

#include <cstdint>

#include "sloppykit/linalg.hpp"
#include "sloppykit/model.hpp"

namespace sloppykit {

struct FimOptions {
  JacobianScheme scheme = JacobianScheme::Auto;
  double step = kDefaultFdStep;
  double rank_threshold = kDefaultRankThreshold;
};

struct FimReport {
  Matrix fim;
  SymmetricEigen eigen;
  Vector singular_values;      // of the whitened Jacobian; squares are the FIM eigenvalues
  double condition_number = kInf;  // +inf unless full rank
  int numerical_rank = 0;
  int class_dimension = 0;
  Vector stiffest_direction;
  Vector sloppiest_direction;
  bool one_sided = false;  // Jacobian used a one-sided stencil somewhere
};

/// K J^T Sigma^{-1} J (Gaussian) or K J^T diag(1/rho) J (categorical) at p0.
/// Throws ZeroProbabilityCell when some rho_i(p0) vanishes.
FimReport fim(const ModelInstance& model, const Vector& p0, const FimOptions& options = {});

/// Report for an explicitly given symmetric PSD matrix. Rank counts
/// sqrt(lambda_i) > rank_threshold * sqrt(lambda_max).
FimReport fim_report_from_matrix(const Matrix& fim, double rank_threshold = kDefaultRankThreshold);

/// 1/2 <p - q, F (p - q)>.
double d_fim(const FimReport& report, const Vector& p, const Vector& q);

/// lambda_max / lambda_min, +inf when rank deficient.
double infinitesimal_sloppiness(const FimReport& report);

struct LocalIdentifiability {
  bool locally_identifiable = false;
  int numerical_rank = 0;
  int class_dimension = 0;
  bool one_sided = false;
};

LocalIdentifiability local_identifiability(const ModelInstance& model, const Vector& p0,
                                          const FimOptions& options = {});

struct MleCovarianceOptions {
  int trials = 1000;
  std::uint64_t seed = 0;
  Execution execution = Execution::Parallel;
  int max_iter = 200;
};

struct MleCovarianceReport {
  Matrix covariance;        // sample covariance of the MLEs
  Matrix standard_errors;   // Monte-Carlo standard error of each covariance entry
  Matrix fim_inverse;
  Vector mean;
  double min_eigenvalue = 0.0;     // of covariance - fim_inverse
  double min_eigenvalue_se = 0.0;  // Monte-Carlo standard error of the above
  int trials = 0;
  int failures = 0;  // trials whose MLE did not converge (excluded)
};

/// Draws Gaussian data sets around phi(p0), fits each by maximum likelihood
/// from p0 and compares the spread of the estimates with the inverse FIM.
/// Throws InvalidTrialCount for trials < 1 and MleFailure when 5% or more
/// of the fits fail.
MleCovarianceReport mle_covariance_mc(const ModelInstance& model, const Vector& p0,
                                      const MleCovarianceOptions& options);

}  // namespace sloppykit
