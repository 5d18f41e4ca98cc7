#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sloppykit/types.hpp"

namespace sloppykit {

using OdeRhs = std::function<Vector(double, const Vector&)>;

struct IvpSpec {
  OdeRhs rhs;
  Vector x0;
  double t_start = 0.0;
  double t_end = 1.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
};

/// Accepted-step record of a Dormand-Prince integration with its
/// fourth-order continuous extension; evaluable anywhere in the span.
class OdeSolution {
 public:
  Vector operator()(double t) const;

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  std::size_t steps() const { return segments_.size(); }

 private:
  friend OdeSolution solve_ivp(const IvpSpec& spec);

  struct Segment {
    double t0 = 0.0;
    double h = 0.0;
    Vector c1, c2, c3, c4, c5;  // continuous-extension coefficients
  };
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  std::vector<Segment> segments_;
};

inline constexpr long kMaxOdeSteps = 1'000'000;

/// Embedded Runge-Kutta 5(4) with PI step control. Each accepted step has
/// max_i |err_i| <= abs_tol + rel_tol * ||x||_inf.
OdeSolution solve_ivp(const IvpSpec& spec);

/// Rows are the state at each requested output time.
Matrix integrate(const IvpSpec& spec, std::span<const double> output_times);

/// Adaptive Simpson quadrature of ||f(t)||_2^2 over [0, t_end] to absolute
/// tolerance tol.
double quadrature_l2(const std::function<Vector(double)>& f, double t_end, double tol);

}  // namespace sloppykit
