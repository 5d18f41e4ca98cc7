#include "sloppykit/fim.hpp"

#include <cmath>
#include <vector>

#include "sloppykit/error.hpp"
#include "sloppykit/identifiability.hpp"
#include "sloppykit/rng.hpp"
#include "parallel.hpp"

namespace sloppykit {

namespace {

// W^T W with every entry computed once and mirrored, so F is exactly symmetric.
Matrix gram(const Matrix& w) {
  const Eigen::Index r = w.cols();
  Matrix f(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i; j < r; ++j) {
      f(i, j) = w.col(i).dot(w.col(j));
      f(j, i) = f(i, j);
    }
  }
  return f;
}

void fill_directions(FimReport& report) {
  const Eigen::Index r = report.fim.rows();
  report.stiffest_direction = canonical_sign(report.eigen.eigenvectors.col(0));
  report.sloppiest_direction = canonical_sign(report.eigen.eigenvectors.col(r - 1));
  report.class_dimension = static_cast<int>(r) - report.numerical_rank;
}

}  // namespace

FimReport fim(const ModelInstance& model, const Vector& p0, const FimOptions& options) {
  const JacobianResult jac = jacobian_detailed(model, p0, options.scheme, options.step);
  const double sqrt_k = std::sqrt(static_cast<double>(model.noise.replicates()));

  Matrix w;
  if (model.noise.kind() == NoiseKind::Gaussian) {
    w = sqrt_k * model.noise.whiten(jac.value);
  } else {
    const Vector rho = evaluate(model, p0);
    w = jac.value;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
      if (!(rho(i) > 0.0)) {
        throw Error(ErrorCode::ZeroProbabilityCell,
                    "cell " + std::to_string(i) + " has zero probability at p0");
      }
      w.row(i) *= sqrt_k / std::sqrt(rho(i));
    }
  }

  FimReport report;
  report.fim = gram(w);
  report.eigen = sym_eigen(report.fim);
  const SvdResult svd = svd_rank(w, options.rank_threshold);
  report.singular_values = svd.singular_values;
  report.numerical_rank = svd.numerical_rank;
  const Eigen::Index r = w.cols();
  if (report.numerical_rank == r) {
    const double ratio = svd.singular_values(0) / svd.singular_values(r - 1);
    report.condition_number = ratio * ratio;
  }
  report.one_sided = jac.one_sided;
  fill_directions(report);
  return report;
}

FimReport fim_report_from_matrix(const Matrix& f, double rank_threshold) {
  if (f.rows() != f.cols()) throw Error(ErrorCode::NotSquare, "FIM must be square");
  FimReport report;
  report.fim = 0.5 * (f + f.transpose());
  report.eigen = sym_eigen(report.fim);
  const Eigen::Index r = f.rows();
  report.singular_values = report.eigen.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  const double top = report.singular_values(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (top > 0.0 && report.singular_values(i) > rank_threshold * top) ++rank;
  }
  report.numerical_rank = rank;
  if (rank == r) report.condition_number = report.eigen.eigenvalues(0) / report.eigen.eigenvalues(r - 1);
  fill_directions(report);
  return report;
}

double d_fim(const FimReport& report, const Vector& p, const Vector& q) {
  if (p.size() != q.size() || p.size() != report.fim.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "d_fim arguments must match the FIM dimension");
  }
  const Vector dp = p - q;
  return 0.5 * dp.dot(report.fim * dp);
}

double infinitesimal_sloppiness(const FimReport& report) { return report.condition_number; }

LocalIdentifiability local_identifiability(const ModelInstance& model, const Vector& p0,
                                          const FimOptions& options) {
  const FimReport report = fim(model, p0, options);
  LocalIdentifiability out;
  out.numerical_rank = report.numerical_rank;
  out.class_dimension = report.class_dimension;
  out.locally_identifiable = report.class_dimension == 0;
  out.one_sided = report.one_sided;
  return out;
}

MleCovarianceReport mle_covariance_mc(const ModelInstance& model, const Vector& p0,
                                      const MleCovarianceOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::InvalidTrialCount, "trials must be positive");
  if (model.noise.kind() != NoiseKind::Gaussian) {
    throw Error(ErrorCode::Unsupported, "Monte-Carlo covariance needs Gaussian noise");
  }
  const FimReport report = fim(model, p0);
  if (report.numerical_rank < model.dim()) {
    throw Error(ErrorCode::Degenerate, "FIM is singular at p0");
  }
  const Matrix fim_inverse = cholesky_solve(report.fim, Matrix::Identity(model.dim(), model.dim()));
  const Vector phi0 = evaluate(model, p0);

  const int n = options.trials;
  const int r = model.dim();
  std::vector<Vector> estimates(n);
  std::vector<char> ok(n, 0);
  MleOptions mle_options;
  mle_options.max_iter = options.max_iter;

  auto run_trial = [&](int k) {
    auto rng = make_stream(options.seed, static_cast<std::uint64_t>(k));
    const Vector z = draw_gaussian_data(model.noise, phi0, rng);
    try {
      const MleResult fit = mle(model, z, p0, mle_options);
      estimates[k] = fit.estimate;
      ok[k] = fit.converged ? 1 : 0;
    } catch (const Error&) {
      ok[k] = 0;
    }
  };
  detail::for_each_index(n, options.execution, run_trial);

  std::vector<Vector> good;
  good.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (ok[k]) good.push_back(estimates[k]);
  }
  MleCovarianceReport out;
  out.trials = n;
  out.failures = n - static_cast<int>(good.size());
  if (out.failures >= 0.05 * n || good.size() < 2) {
    throw Error(ErrorCode::MleFailure, std::to_string(out.failures) + " of " + std::to_string(n) +
                                           " maximum-likelihood fits failed");
  }
  const double m = static_cast<double>(good.size());
  out.mean = Vector::Zero(r);
  for (const auto& x : good) out.mean += x;
  out.mean /= m;

  out.covariance = Matrix::Zero(r, r);
  for (const auto& x : good) {
    const Vector c = x - out.mean;
    out.covariance += c * c.transpose();
  }
  out.covariance /= (m - 1.0);

  // Standard error of each entry from the spread of the centered products.
  out.standard_errors = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      double s = 0.0;
      for (const auto& x : good) {
        const double y = (x(i) - out.mean(i)) * (x(j) - out.mean(j)) - out.covariance(i, j);
        s += y * y;
      }
      out.standard_errors(i, j) = std::sqrt(s / (m - 1.0) / m);
    }
  }

  out.fim_inverse = fim_inverse;
  const SymmetricEigen diff = sym_eigen(out.covariance - fim_inverse);
  out.min_eigenvalue = diff.eigenvalues(r - 1);
  const Vector v = diff.eigenvectors.col(r - 1);
  const double var_v = v.dot(out.covariance * v);
  double s = 0.0;
  for (const auto& x : good) {
    const double u = v.dot(x - out.mean);
    s += (u * u - var_v) * (u * u - var_v);
  }
  out.min_eigenvalue_se = std::sqrt(s / (m - 1.0) / m);
  return out;
}

}  // namespace sloppykit
