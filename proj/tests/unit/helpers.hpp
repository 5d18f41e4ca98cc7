#pragma once

#include <random>

#include "sloppykit/types.hpp"

namespace testing_support {

inline sloppykit::Vector uniform_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  sloppykit::Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline sloppykit::Matrix gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  sloppykit::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

inline sloppykit::Matrix random_spd(std::mt19937_64& rng, int n) {
  const sloppykit::Matrix a = gaussian_matrix(rng, n, n);
  return a * a.transpose() + n * sloppykit::Matrix::Identity(n, n);
}

// Shifted so every eigenvalue has real part <= -margin.
inline sloppykit::Matrix random_hurwitz(std::mt19937_64& rng, int n, double margin = 0.5) {
  sloppykit::Matrix a = gaussian_matrix(rng, n, n);
  const Eigen::EigenSolver<sloppykit::Matrix> es(a, false);
  const double shift = es.eigenvalues().real().maxCoeff() + margin;
  a -= shift * sloppykit::Matrix::Identity(n, n);
  return a;
}

}  // namespace testing_support
