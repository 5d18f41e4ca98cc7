#include "sloppykit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sloppykit/error.hpp"

namespace sloppykit {

namespace {

constexpr int kMaxJacobiSweeps = 100;

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::NotSquare, std::string(what) + ": matrix is " +
                                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

double off_diagonal_frobenius(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

Vector canonical_sign(Vector v) {
  if (v.size() == 0) return v;
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0.0) v = -v;
  return v;
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double norm_inf(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

SymmetricEigen sym_eigen(const Matrix& input) {
  require_square(input, "sym_eigen");
  const Eigen::Index n = input.rows();
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);

  const double fro = a.norm();
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    if (off_diagonal_frobenius(a) <= 1e-14 * fro) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rutishauser's stable rotation: t = sgn(theta) / (|theta| + sqrt(theta^2 + 1)).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  return out;
}

SvdResult svd_rank(const Matrix& input, double rel_threshold) {
  const Eigen::Index n = input.cols();
  Matrix u = input;
  Matrix v = Matrix::Identity(n, n);
  constexpr double eps = 2.220446049250313e-16;

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = u.col(p).squaredNorm();
        const double beta = u.col(q).squaredNorm();
        const double gamma = u.col(p).dot(u.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(zeta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = c * t;
        for (Eigen::Index k = 0; k < u.rows(); ++k) {
          const double ukp = u(k, p);
          const double ukq = u(k, q);
          u(k, p) = c * ukp - s * ukq;
          u(k, q) = s * ukp + c * ukq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sigma(n);
  for (Eigen::Index k = 0; k < n; ++k) sigma(k) = u.col(k).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

  SvdResult out;
  out.singular_values.resize(n);
  out.right_vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.singular_values(k) = sigma(order[k]);
    out.right_vectors.col(k) = v.col(order[k]);
  }
  const double smax = n > 0 ? out.singular_values(0) : 0.0;
  out.numerical_rank = 0;
  if (smax > 0.0) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (out.singular_values(k) > rel_threshold * smax) ++out.numerical_rank;
    }
  }
  return out;
}

Matrix cholesky_factor(const Matrix& spd) {
  require_square(spd, "cholesky_factor");
  const Eigen::Index n = spd.rows();
  const double max_diag = n > 0 ? spd.diagonal().cwiseAbs().maxCoeff() : 0.0;
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 1e-13 * max_diag) || max_diag == 0.0) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(d));
    }
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Matrix forward_substitute(const Matrix& lower, const Matrix& b) {
  const Eigen::Index n = lower.rows();
  if (b.rows() != n) throw Error(ErrorCode::DimensionMismatch, "forward_substitute");
  Matrix x = b;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = x(i, c);
      for (Eigen::Index k = 0; k < i; ++k) s -= lower(i, k) * x(k, c);
      x(i, c) = s / lower(i, i);
    }
  }
  return x;
}

Matrix backward_substitute_transposed(const Matrix& lower, const Matrix& b) {
  const Eigen::Index n = lower.rows();
  if (b.rows() != n) throw Error(ErrorCode::DimensionMismatch, "backward_substitute_transposed");
  Matrix x = b;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = x(i, c);
      for (Eigen::Index k = i + 1; k < n; ++k) s -= lower(k, i) * x(k, c);
      x(i, c) = s / lower(i, i);
    }
  }
  return x;
}

Matrix cholesky_solve(const Matrix& spd, const Matrix& b) {
  const Matrix l = cholesky_factor(spd);
  return backward_substitute_transposed(l, forward_substitute(l, b));
}

Matrix lu_solve(Matrix a, Matrix b) {
  require_square(a, "lu_solve");
  const Eigen::Index n = a.rows();
  if (b.rows() != n) throw Error(ErrorCode::DimensionMismatch, "lu_solve");
  const double scale = max_abs(a);
  if (scale == 0.0) throw Error(ErrorCode::SingularSystem, "zero matrix");

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    if (std::abs(a(piv, k)) <= 1e-14 * scale) {
      throw Error(ErrorCode::SingularSystem, "vanishing pivot at column " + std::to_string(k));
    }
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      b.row(k).swap(b.row(piv));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      a(i, k) = 0.0;
      for (Eigen::Index j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      b.row(i) -= f * b.row(k);
    }
  }
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = b(i, c);
      for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * b(j, c);
      b(i, c) = s / a(i, i);
    }
  }
  return b;
}

Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  require_square(a, "lyapunov_solve");
  require_square(q, "lyapunov_solve");
  const Eigen::Index m = a.rows();
  if (q.rows() != m) throw Error(ErrorCode::DimensionMismatch, "lyapunov_solve: Q size");

  // Column-major vec: vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P).
  const Eigen::Index n = m * m;
  Matrix kron = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index row = i + j * m;
      for (Eigen::Index k = 0; k < m; ++k) {
        kron(row, i + k * m) += a(k, j);  // (P A)_{ij} = sum_k P_{ik} A_{kj}
        kron(row, k + j * m) += a(k, i);  // (A^T P)_{ij} = sum_k A_{ki} P_{kj}
      }
    }
  }
  Matrix rhs(n, 1);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) rhs(i + j * m, 0) = -q(i, j);
  }
  const Matrix sol = lu_solve(std::move(kron), std::move(rhs));
  Matrix p(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) p(i, j) = sol(i + j * m, 0);
  }
  return 0.5 * (p + p.transpose());
}

}  // namespace sloppykit
