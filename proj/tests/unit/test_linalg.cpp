#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sloppykit/error.hpp"
#include "sloppykit/linalg.hpp"

using namespace sloppykit;
using testing_support::gaussian_matrix;
using testing_support::random_hurwitz;
using testing_support::random_spd;

TEST_CASE("sym_eigen reconstructs random symmetric matrices") {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 8; ++n) {
    const Matrix a0 = gaussian_matrix(rng, n, n);
    const Matrix a = a0 + a0.transpose();
    const SymmetricEigen e = sym_eigen(a);
    const Matrix& v = e.eigenvectors;
    CHECK(max_abs(v.transpose() * v - Matrix::Identity(n, n)) < 1e-13);
    CHECK(max_abs(v * e.eigenvalues.asDiagonal() * v.transpose() - a) < 1e-12 * std::max(1.0, max_abs(a)));
    for (int k = 1; k < n; ++k) CHECK(e.eigenvalues(k - 1) >= e.eigenvalues(k));

    const Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    for (int k = 0; k < n; ++k) {
      CHECK(e.eigenvalues(k) == doctest::Approx(oracle.eigenvalues()(n - 1 - k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("sym_eigen on the line FIM") {
  Matrix f(2, 2);
  f << 2, 1, 1, 1;
  const SymmetricEigen e = sym_eigen(f);
  CHECK(e.eigenvalues(0) == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-15));
  CHECK(e.eigenvalues(1) == doctest::Approx((3 - std::sqrt(5.0)) / 2).epsilon(1e-15));
}

TEST_CASE("svd_rank matches Eigen singular values and detects deficiency") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 2 + trial % 7;
    const int cols = 1 + trial % 5;
    const Matrix a = gaussian_matrix(rng, rows, cols);
    const SvdResult s = svd_rank(a);
    const Eigen::JacobiSVD<Matrix> oracle(a);
    for (int k = 0; k < std::min(rows, cols); ++k) {
      CHECK(s.singular_values(k) == doctest::Approx(oracle.singularValues()(k)).epsilon(1e-12));
    }
    CHECK(s.numerical_rank == std::min(rows, cols));
  }
  Matrix low = gaussian_matrix(rng, 6, 2) * gaussian_matrix(rng, 2, 4);
  CHECK(svd_rank(low).numerical_rank == 2);
  CHECK(svd_rank(Matrix::Zero(3, 2)).numerical_rank == 0);
}

TEST_CASE("cholesky and triangular solves") {
  std::mt19937_64 rng(13);
  for (int n = 1; n <= 8; ++n) {
    const Matrix s = random_spd(rng, n);
    const Matrix l = cholesky_factor(s);
    CHECK(max_abs(l * l.transpose() - s) < 1e-12 * max_abs(s));
    const Matrix b = gaussian_matrix(rng, n, 3);
    CHECK(max_abs(l * forward_substitute(l, b) - b) < 1e-11);
    CHECK(max_abs(l.transpose() * backward_substitute_transposed(l, b) - b) < 1e-11);
    CHECK(max_abs(s * cholesky_solve(s, b) - b) < 1e-10);
  }
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky_factor(indefinite), Error);
}

TEST_CASE("lu_solve solves and flags singular systems") {
  std::mt19937_64 rng(14);
  const Matrix a = gaussian_matrix(rng, 5, 5);
  const Matrix b = gaussian_matrix(rng, 5, 2);
  CHECK(max_abs(a * lu_solve(a, b) - b) < 1e-11);
  Matrix sing(2, 2);
  sing << 1, 2, 2, 4;
  try {
    lu_solve(sing, Matrix::Ones(2, 1));
    FAIL("expected SingularSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSystem);
  }
}

TEST_CASE("lyapunov_solve satisfies the equation") {
  std::mt19937_64 rng(15);
  for (int n = 1; n <= 5; ++n) {
    const Matrix a = random_hurwitz(rng, n);
    const Matrix q = random_spd(rng, n);
    const Matrix p = lyapunov_solve(a, q);
    CHECK(max_abs(a.transpose() * p + p * a + q) < 1e-10 * max_abs(q));
    CHECK(max_abs(p - p.transpose()) < 1e-12 * max_abs(p));
    // Hurwitz A with Q > 0 gives P > 0.
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(p).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("canonical_sign and norms") {
  Vector v(3);
  v << 0.1, -0.9, 0.3;
  const Vector c = canonical_sign(v);
  CHECK(c(1) == 0.9);
  CHECK(c(0) == -0.1);
  Matrix m(2, 2);
  m << 1, -3, 2, 0.5;
  CHECK(max_abs(m) == 3.0);
  CHECK(norm_inf(m) == 4.0);
}

TEST_CASE("documented small examples") {
  const SymmetricEigen id = sym_eigen(Matrix::Identity(3, 3));
  CHECK(id.eigenvalues == Vector::Ones(3));
  CHECK_THROWS_AS(sym_eigen(Matrix::Ones(2, 3)), Error);

  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  const Matrix x = cholesky_solve(d, (Matrix(2, 1) << 2, 3).finished());
  CHECK(x(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(cholesky_solve(Matrix::Identity(3, 3), Matrix::Ones(3, 2)) == Matrix::Ones(3, 2));

  for (int m = 1; m <= 4; ++m) {
    const Matrix p = lyapunov_solve(-Matrix::Identity(m, m), Matrix::Identity(m, m));
    CHECK(max_abs(p - 0.5 * Matrix::Identity(m, m)) < 1e-14);
  }
  CHECK(lyapunov_solve(Matrix::Constant(1, 1, -3.0), Matrix::Constant(1, 1, 6.0))(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("2x2 eigenvalues match the characteristic polynomial") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 200; ++k) {
    const double a = u(rng), b = u(rng), c = u(rng);
    Matrix m(2, 2);
    m << a, b, b, c;
    const double mean = (a + c) / 2, rad = std::hypot((a - c) / 2, b);
    const SymmetricEigen e = sym_eigen(m);
    CHECK(std::abs(e.eigenvalues(0) - (mean + rad)) <= 1e-12 * std::max(1.0, rad));
    CHECK(std::abs(e.eigenvalues(1) - (mean - rad)) <= 1e-12 * std::max(1.0, rad));
  }
}

TEST_CASE("svd rank is transpose invariant") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k) {
    const int rows = 1 + k % 6, cols = 1 + (k / 6) % 5, inner = 1 + k % 3;
    const Matrix a = gaussian_matrix(rng, rows, inner) * gaussian_matrix(rng, inner, cols);
    CHECK(svd_rank(a).numerical_rank == svd_rank(a.transpose()).numerical_rank);
  }
  Matrix rank2 = gaussian_matrix(rng, 3, 2) * gaussian_matrix(rng, 2, 5);
  CHECK(svd_rank(rank2).numerical_rank == 2);
}
