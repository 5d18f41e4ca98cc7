#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sloppykit/error.hpp"
#include "sloppykit/identifiability.hpp"
#include "sloppykit/models.hpp"

using namespace sloppykit;
using testing_support::uniform_vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("equivalence testing") {
  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  CHECK(test_equivalence(se, vec({0.4, 2.2}), vec({2.2, 0.4})).equivalent);
  const auto coins = models::make_coins();
  CHECK(test_equivalence(coins, vec({0.3, 0.5, 0.5}), vec({0.9, 0.5, 0.5})).equivalent);
  const auto line = models::make_line({0, 1});
  const auto v = test_equivalence(line, vec({0, 1}), vec({1, 0}));
  CHECK_FALSE(v.equivalent);
  CHECK(v.residual == 1.0);
  std::mt19937_64 rng(71);
  for (int k = 0; k < 20; ++k) {
    const Vector p = uniform_vector(rng, 3, 0, 1);
    const auto self = test_equivalence(coins, p, p);
    CHECK(self.equivalent);
    CHECK(self.residual <= self.tolerance);
  }
}

TEST_CASE("fiber of the nonlinear summary is the scaling curve") {
  const auto nl = models::make_nonlinear_ode_summary();
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector p0 = Vector::Ones(5) + uniform_vector(rng, 5, -0.4, 0.4);
    FiberOptions o;
    o.steps = 200;
    const FiberTrace t = trace_fiber(nl, p0, o);
    CHECK(t.stop == FiberStop::Steps);
    CHECK(t.points.size() == 201);
    CHECK(t.drift <= 1e-6);
    CHECK(t.arc_length == doctest::Approx(2.0).epsilon(1e-9));
    const double ratio0 = p0(3) / p0(1);
    for (const Vector& p : t.points) {
      CHECK(std::abs(p(3) / p(1) - ratio0) <= 1e-6 * std::abs(ratio0));
      for (int i : {0, 2, 4}) CHECK(std::abs(p(i) - p0(i)) <= 1e-6 * std::abs(p0(i)));
    }
  }
}

TEST_CASE("two-compartment fiber on the boundary") {
  const auto tc = models::make_two_compartment({0.5, 1, 2}, 1);
  FiberOptions o;
  o.steps = 50;
  o.step_size = 0.02;
  const FiberTrace t = trace_fiber(tc, vec({0, 1.3}), o);
  CHECK(t.drift <= 1e-6);
  CHECK(t.points.size() > 10);
  for (const Vector& p : t.points) CHECK(std::abs(p(0)) <= 1e-12);
  CHECK(std::abs(t.points.back()(1) - 1.3) > 0.1);
}

TEST_CASE("fiber tracing requires a one-dimensional kernel") {
  const auto line = models::make_line({0, 1});
  CHECK(code_of([&] { trace_fiber(line, vec({0, 0})); }) == ErrorCode::WrongKernelDimension);
  const auto c = models::make_constant(2, vec({1}));
  CHECK(code_of([&] { trace_fiber(c, vec({0, 0})); }) == ErrorCode::WrongKernelDimension);
}

TEST_CASE("MLE examples") {
  const auto line = models::make_line({0, 1});
  const MleResult r = mle(line, vec({1, 3}), vec({-4, 7}));
  CHECK(r.converged);
  CHECK(max_abs(r.estimate - vec({1, 2})) <= 1e-8);

  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  const Vector z = evaluate(se, vec({2, 0.5}));
  for (const Vector& start : {vec({3, 0.2}), vec({0.1, 4})}) {
    const MleResult s = mle(se, z, start);
    CHECK(s.converged);
    const bool near_a = (s.estimate - vec({2, 0.5})).norm() <= 1e-6;
    const bool near_b = (s.estimate - vec({0.5, 2})).norm() <= 1e-6;
    CHECK((near_a || near_b));
  }

  const auto coins = models::make_coins(10);
  const Vector rho = evaluate(coins, vec({0.5, 0.8, 0.2}));
  const MleResult c = mle(coins, rho, vec({0.4, 0.6, 0.3}));
  CHECK(c.converged);
  CHECK((evaluate(coins, c.estimate) - rho).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("MLE convergence criterion") {
  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  const Vector z = evaluate(se, vec({1.2, 0.3})) + vec({0.01, -0.02, 0.005});
  const MleResult r = mle(se, z, vec({2, 2.5}));
  REQUIRE(r.converged);
  CHECK(r.gradient_norm <= 1e-8 * std::max(1.0, std::abs(r.neg_log_likelihood)));
  CHECK(r.neg_log_likelihood == doctest::Approx(neg_log_likelihood(se, z, r.estimate)));

  MleOptions few;
  few.max_iter = 1;
  const MleResult partial = mle(se, z, vec({4, 4}), few);
  CHECK_FALSE(partial.converged);
  CHECK(partial.iterations <= 1);
}

TEST_CASE("noiseless MLE recovers the data for every Gaussian catalog model") {
  std::mt19937_64 rng(73);
  Matrix a0(2, 2);
  a0 << -1, 0.5, 0, -2;
  const std::vector<std::pair<ModelInstance, Vector>> cases = {
      {models::make_line({0, 1, 2}), vec({0.3, -0.4})},
      {models::make_sum_exp({1.0 / 3, 1, 3}), vec({1.5, 0.4})},
      {models::make_two_compartment({0.5, 1, 2}, 1), vec({0.8, 1.7})},
      {models::make_nonlinear_ode_summary(), vec({0.7, 1.3, -0.8, 2.1, 0.6})},
      {models::make_circle(), vec({1, 1})},
  };
  for (const auto& [m, truth] : cases) {
    CAPTURE(m.name);
    const Vector z = evaluate(m, truth);
    int ok = 0;
    for (int k = 0; k < 10; ++k) {
      const Vector start = m.space.clip(truth + uniform_vector(rng, m.dim(), -0.3, 0.3));
      try {
        const MleResult r = mle(m, z, start);
        if (r.converged && (evaluate(m, r.estimate) - z).cwiseAbs().maxCoeff() <= 1e-8) ++ok;
      } catch (const Error&) {
      }
    }
    CHECK(ok >= 9);
  }
}

TEST_CASE("likelihood ratio threshold and Halton points") {
  CHECK(likelihood_ratio_threshold(1, 0.05) == doctest::Approx(3.841458820694124 / 2).epsilon(1e-12));
  CHECK(likelihood_ratio_threshold(2, 0.05) == doctest::Approx(-std::log(0.05)).epsilon(1e-12));
  const Vector h1 = halton(1, 3);
  CHECK(h1 == vec({0.5, 1.0 / 3, 0.2}));
  CHECK(halton(2, 2) == vec({0.25, 2.0 / 3}));
  for (std::uint64_t i = 1; i < 100; ++i) {
    const Vector h = halton(i, 5);
    CHECK(h.minCoeff() >= 0);
    CHECK(h.maxCoeff() < 1);
  }
}

TEST_CASE("practical identifiability verdicts") {
  ConfidenceOptions o;
  o.seed = 11;
  const auto line = models::make_line({0, 1});
  const auto a = assess_practical_identifiability(line, vec({1, 3}), vec({0, 0}), o);
  CHECK(a.bounded);
  CHECK(a.escape_directions.empty());
  CHECK(max_abs(a.estimate - vec({1, 2})) <= 1e-9);
  CHECK(a.epsilon == doctest::Approx(a.nll_at_estimate + likelihood_ratio_threshold(2, 0.05)));
  CHECK(a.n_directions == 64);
  CHECK(a.probe_radius == doctest::Approx(1e4 * (1 + std::sqrt(5.0))));

  const auto conformal = models::make_conformal();
  const auto u = assess_practical_identifiability(conformal, vec({0.1, 0.05}), vec({1, 0.5}), o);
  CHECK_FALSE(u.bounded);
  CHECK_FALSE(u.escape_directions.empty());
  for (const Vector& d : u.escape_directions) CHECK(d.norm() == doctest::Approx(1.0));

  const auto circle = models::make_circle();
  const auto c = assess_practical_identifiability(circle, vec({2}), vec({1, 0.3}), o);
  CHECK(c.bounded);
  int converged = 0;
  for (const MleResult& r : c.starts) {
    if (!r.converged) continue;
    ++converged;
    CHECK(std::abs(r.estimate.norm() - std::sqrt(2.0)) <= 1e-6);
  }
  CHECK(converged >= 2);

  const auto again = assess_practical_identifiability(conformal, vec({0.1, 0.05}), vec({1, 0.5}), o);
  CHECK(again.escape_directions.size() == u.escape_directions.size());
  CHECK(again.estimate == u.estimate);
  o.alpha = 1.5;
  CHECK_THROWS_AS(assess_practical_identifiability(line, vec({1, 3}), vec({0, 0}), o), Error);
}

TEST_CASE("coverage of the likelihood region") {
  const auto line = models::make_line({0, 1});
  const CoverageResult c = simulate_coverage(line, vec({0.5, -1}), 0.05, 2000, 99);
  CHECK(c.trials == 2000);
  CHECK(std::abs(c.coverage - 0.95) <= 3 * c.standard_error);
  CHECK(c.standard_error == doctest::Approx(std::sqrt(0.05 * 0.95 / 2000)));
}

TEST_CASE("draw_gaussian_data has the requested spread") {
  Matrix s(2, 2);
  s << 2, 0.6, 0.6, 1;
  const NoiseModel n = NoiseModel::gaussian(s, 4);
  std::mt19937_64 rng(74);
  const Vector phi = vec({1, -1});
  Matrix acc = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) {
    const Vector e = draw_gaussian_data(n, phi, rng) - phi;
    mean += e;
    acc += e * e.transpose();
  }
  CHECK(max_abs(mean / draws) < 0.01);
  CHECK(max_abs(acc / draws - s / 4) < 0.01);
}
