#pragma once

#include "sloppykit/types.hpp"

namespace sloppykit {

/// Relative singular-value cutoff used for numerical rank decisions.
inline constexpr double kDefaultRankThreshold = 1e-8;

struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

/// Cyclic Jacobi eigensolver for small dense symmetric matrices. The input
/// is symmetrized as (A + A^T)/2 before rotating.
SymmetricEigen sym_eigen(const Matrix& a);

struct SvdResult {
  Vector singular_values;  // descending, length = cols
  Matrix right_vectors;    // cols x cols, column k pairs with singular_values[k]
  int numerical_rank = 0;
};

/// One-sided (Hestenes) Jacobi SVD. numerical_rank counts singular values
/// strictly above rel_threshold * sigma_max.
SvdResult svd_rank(const Matrix& a, double rel_threshold = kDefaultRankThreshold);

/// Lower Cholesky factor L with spd = L L^T. Throws NotPositiveDefinite when
/// a pivot drops to 1e-13 * max diagonal or below.
Matrix cholesky_factor(const Matrix& spd);

/// Solves L x = b for lower-triangular L (forward substitution, columnwise).
Matrix forward_substitute(const Matrix& lower, const Matrix& b);
/// Solves L^T x = b for lower-triangular L.
Matrix backward_substitute_transposed(const Matrix& lower, const Matrix& b);

/// Returns spd^{-1} b via Cholesky factorization and two triangular solves.
Matrix cholesky_solve(const Matrix& spd, const Matrix& b);

/// Dense LU with partial pivoting. Throws SingularSystem on a vanishing pivot.
Matrix lu_solve(Matrix a, Matrix b);

/// Solves A^T P + P A = -Q for symmetric P by vectorizing into the Kronecker
/// system (I (x) A^T + A^T (x) I) vec(P) = -vec(Q).
Matrix lyapunov_solve(const Matrix& a, const Matrix& q);

/// Flips v so that its largest-magnitude component is positive.
Vector canonical_sign(Vector v);

double max_abs(const Matrix& a);
/// Induced infinity norm (max absolute row sum).
double norm_inf(const Matrix& a);

}  // namespace sloppykit
