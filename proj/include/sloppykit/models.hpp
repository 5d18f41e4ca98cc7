#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sloppykit/model.hpp"

namespace sloppykit::models {

/// Gaussian noise settings shared by the catalog constructors. An absent
/// covariance means the identity.
struct GaussianSpec {
  std::optional<Matrix> covariance;
  int replicates = 1;
};

/// x(t) = a0 + a1 t sampled at the timepoints.
ModelInstance make_line(const std::vector<double>& timepoints, const GaussianSpec& noise = {});

/// exp(-a t) + exp(-b t) on the closed orthant.
ModelInstance make_sum_exp(const std::vector<double>& timepoints, const GaussianSpec& noise = {});

/// Exact solution of x1' = -p1 x1, x2' = p1 x1 - p2 x2 with x(0) = (c1, 0);
/// output interleaves (x1(t_j), x2(t_j)).
ModelInstance make_two_compartment(const std::vector<double>& timepoints, double c1,
                                   const GaussianSpec& noise = {});

/// Heads-count distribution of four tosses with a randomly picked coin.
ModelInstance make_coins(int replicates = 1);

/// Exhaustive summary (phi_1..phi_5) of the 5-parameter nonlinear ODE.
ModelInstance make_nonlinear_ode_summary(const GaussianSpec& noise = {});

/// Recovers (p1, p3, p4/p2, p5) from the summary values.
Vector nonlinear_ode_summary_inverse(const Vector& phi);

/// First six raw moments of lambda N(mu, sigma^2) + (1 - lambda) N(nu, tau^2).
ModelInstance make_gaussian_mixture_moments(const GaussianSpec& noise = {});

/// Raw moments M_0..M_k of N(mean, sd^2) by M_k = mean M_{k-1} + (k-1) sd^2 M_{k-2}.
Vector gaussian_raw_moments(double mean, double sd, int k_max);

/// Linear parameter-varying system with parameter (p, x0). Without
/// timepoints only the continuous-data premetric is available.
ModelInstance make_lpv(std::function<Matrix(const Vector&)> system_matrix, const Matrix& output,
                       int param_dim, const GaussianSpec& noise = {},
                       std::optional<std::vector<double>> timepoints = std::nullopt);

/// A(p) = A0 + sum_k p_k A_k.
std::function<Matrix(const Vector&)> affine_system_matrix(Matrix a0, std::vector<Matrix> terms);

/// phi(p) = M p on R^r.
ModelInstance make_linear(const Matrix& map, const GaussianSpec& noise = {});

/// Constant prediction map on R^dim.
ModelInstance make_constant(int dim, const Vector& value, const GaussianSpec& noise = {});

/// (a, b) -> (a, -b) / (a^2 + b^2) on [1/2, inf) x R.
ModelInstance make_conformal(const GaussianSpec& noise = {});

/// (a, b) -> a^2 + b^2 on [1/2, inf) x R.
ModelInstance make_circle(const GaussianSpec& noise = {});

struct CatalogEntry {
  std::string name;
  std::string summary;
  std::string parameters;  // constructor parameters as accepted by the CLI config
  std::string reference;
};

const std::vector<CatalogEntry>& catalog();

}  // namespace sloppykit::models
