#pragma once

#include <Eigen/Dense>

namespace sloppykit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Selects between the OpenMP kernels and their serial reference loops.
/// Both paths produce bit-identical results; per-item randomness is derived
/// from (seed, item index) and never from thread identity.
enum class Execution { Serial, Parallel };

}  // namespace sloppykit
