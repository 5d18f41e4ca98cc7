#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sloppykit/fim.hpp"
#include "sloppykit/model.hpp"

namespace sloppykit {

struct EquivalenceVerdict {
  bool equivalent = false;
  double residual = 0.0;  // |phi(p) - phi(q)|_inf
  double tolerance = 0.0;
};

/// tol <= 0 selects 1e-10 * max(1, |phi(p)|_inf).
EquivalenceVerdict test_equivalence(const ModelInstance& model, const Vector& p, const Vector& q,
                                    double tol = 0.0);

struct FiberOptions {
  int steps = 100;
  double step_size = 1e-2;
  double tolerance = 1e-6;          // allowed drift of phi
  double corrector_tolerance = 1e-8;
  int corrector_iterations = 20;
  FimOptions jacobian;
};

enum class FiberStop { Steps, Boundary, RankChange, EvaluationError };

std::string_view to_string(FiberStop stop) noexcept;

struct FiberTrace {
  Vector seed;
  std::vector<Vector> points;  // starts with the seed
  double arc_length = 0.0;
  double drift = 0.0;
  FiberStop stop = FiberStop::Steps;
};

/// Predictor-corrector continuation along the one-dimensional kernel of the
/// Jacobian. Throws WrongKernelDimension unless the kernel at p0 is a line
/// and CorrectorDivergence when a corrector fails to return to the fiber.
FiberTrace trace_fiber(const ModelInstance& model, const Vector& p0, const FiberOptions& options = {});

struct MleOptions {
  int max_iter = 500;
  double tolerance = 1e-8;
  JacobianScheme scheme = JacobianScheme::Auto;
};

struct MleResult {
  Vector estimate;
  double neg_log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  Vector start;
  double gradient_norm = 0.0;  // projected gradient of the nll at the estimate
};

/// -log psi(p, z0) without additive constants: K/2 |L^{-1}(z0 - phi(p))|^2
/// for Gaussian noise, K sum_i z0_i (-log rho_i(p)) for categorical noise.
double neg_log_likelihood(const ModelInstance& model, const Vector& z0, const Vector& p);

/// Levenberg-Marquardt (Gaussian) or projected Fisher scoring (categorical)
/// with projection onto P after every step.
MleResult mle(const ModelInstance& model, const Vector& z0, const Vector& start,
              const MleOptions& options = {});

struct ProbeOptions {
  std::optional<double> r_max;       // default 1e4 (1 + |p_hat|)
  std::optional<int> n_directions;   // default 64 for r <= 3, else 256
  double growth = 1.5;
  double first_radius = 1e-3;
};

struct ConfidenceOptions {
  double alpha = 0.05;
  int starts = 8;
  std::uint64_t seed = 0;
  /// Box for the low-discrepancy starts; default start +- 5 max(1, |start_i|) clipped to P.
  std::optional<ParameterSpace> start_box;
  ProbeOptions probe;
  MleOptions mle;
  Execution execution = Execution::Parallel;
};

struct ConfidenceAssessment {
  Vector z0;
  double alpha = 0.05;
  double epsilon = 0.0;
  bool bounded = true;
  std::vector<Vector> escape_directions;
  double probe_radius = 0.0;
  int n_directions = 0;
  Vector estimate;
  double nll_at_estimate = 0.0;
  std::vector<MleResult> starts;
};

/// Likelihood-based region U_eps = {p : nll(p) < eps} with
/// eps = nll(p_hat) + chi2_r(1 - alpha) / 2, probed radially from p_hat.
ConfidenceAssessment assess_practical_identifiability(const ModelInstance& model, const Vector& z0,
                                                      const Vector& start,
                                                      const ConfidenceOptions& options);

/// chi2_r(1 - alpha) / 2.
double likelihood_ratio_threshold(int r, double alpha);

/// Halton point `index` (1-based skips the origin) in [0, 1)^dim.
Vector halton(std::uint64_t index, int dim);

struct CoverageResult {
  int trials = 0;
  int covered = 0;
  double coverage = 0.0;
  double standard_error = 0.0;  // binomial, at the nominal level
};

/// Fraction of simulated data sets z ~ N(phi(p0), Sigma/K) whose region
/// U_eps(z) contains p0.
CoverageResult simulate_coverage(const ModelInstance& model, const Vector& p0, double alpha, int trials,
                                 std::uint64_t seed, Execution execution = Execution::Parallel);

/// Gaussian data z = phi + L xi / sqrt(K) drawn from the given stream.
Vector draw_gaussian_data(const NoiseModel& noise, const Vector& phi, std::mt19937_64& rng);

}  // namespace sloppykit
