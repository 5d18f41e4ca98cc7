#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sloppykit/error.hpp"
#include "sloppykit/linalg.hpp"
#include "sloppykit/models.hpp"

using namespace sloppykit;

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

TEST_CASE("parameter space membership and clipping") {
  const auto box = ParameterSpace::box(vec({0, -1}), vec({1, kInf}));
  CHECK(box.contains(vec({0, -1})));
  CHECK(box.contains(vec({1 + 1e-13, 5})));
  CHECK_FALSE(box.contains(vec({1 + 1e-9, 5})));
  CHECK_FALSE(box.contains(vec({0.5})));
  CHECK_FALSE(box.contains(vec({std::nan(""), 0})));
  CHECK(box.clip(vec({2, -3})) == vec({1, -1}));
  CHECK(ParameterSpace::unbounded(3).contains(vec({1e300, -1e300, 0})));
}

TEST_CASE("evaluate examples") {
  const auto line = models::make_line({0, 1});
  CHECK(evaluate(line, vec({1, 2})) == vec({1, 3}));

  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  CHECK(evaluate(se, vec({0, 0})) == vec({2, 2, 2}));

  const auto coins = models::make_coins();
  const Vector rho = evaluate(coins, vec({0.5, 1, 0}));
  CHECK(max_abs(rho - vec({0.5, 0, 0, 0, 0.5})) < 1e-15);
}

TEST_CASE("evaluate errors") {
  const auto se = models::make_sum_exp({1, 2});
  CHECK(code_of([&] { evaluate(se, vec({-1, 0})); }) == ErrorCode::OutOfDomain);
  CHECK(code_of([&] { evaluate(se, vec({1})); }) == ErrorCode::DimensionMismatch);

  auto bad = models::make_line({0, 1});
  bad.prediction.eval = [](const Vector&) { return vec({std::nan(""), 0}); };
  CHECK(code_of([&] { evaluate(bad, vec({0, 0})); }) == ErrorCode::NonFinite);
}

TEST_CASE("evaluate is referentially transparent") {
  const auto mix = models::make_gaussian_mixture_moments();
  const Vector p = vec({0.3, 0.2, 1.1, -0.7, 0.4});
  const Vector a = evaluate(mix, p);
  const Vector b = evaluate(mix, p);
  CHECK(a == b);
}

TEST_CASE("jacobian examples") {
  const auto line = models::make_line({0, 1});
  Matrix expect(2, 2);
  expect << 1, 0, 1, 1;
  CHECK(jacobian(line, vec({3, -7})) == expect);
  CHECK(max_abs(jacobian(line, vec({3, -7}), JacobianScheme::CentralFd) - expect) < 1e-9);

  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  const double a0 = 4;
  const Matrix j = jacobian(se, vec({a0, 0.125}), JacobianScheme::Analytic);
  CHECK(j(0, 0) == doctest::Approx(-std::exp(-a0 / 3) / 3).epsilon(1e-15));
  CHECK(j(1, 0) == doctest::Approx(-std::exp(-a0)).epsilon(1e-15));
  CHECK(j(2, 0) == doctest::Approx(-3 * std::exp(-3 * a0)).epsilon(1e-15));

  const Matrix fd = jacobian(se, vec({a0, 0.125}), JacobianScheme::CentralFd, 1e-5);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) CHECK(std::abs(fd(r, c) - j(r, c)) <= 1e-6 * std::abs(j(r, c)));
  }
}

TEST_CASE("jacobian falls back to one-sided differences at the boundary") {
  const auto se = models::make_sum_exp({0.5, 2});
  const auto res = jacobian_detailed(se, vec({0, 1}), JacobianScheme::CentralFd);
  CHECK(res.one_sided);
  const Matrix exact = jacobian(se, vec({0, 1}), JacobianScheme::Analytic);
  CHECK(max_abs(res.value - exact) < 1e-8);

  auto no_analytic = se;
  no_analytic.prediction.jacobian = nullptr;
  CHECK(code_of([&] { jacobian(no_analytic, vec({1, 1}), JacobianScheme::Analytic); }) ==
        ErrorCode::MissingAnalyticJacobian);
  CHECK_FALSE(jacobian_detailed(no_analytic, vec({1, 1})).one_sided);
}

TEST_CASE("fd_jacobian reports stencils that cannot fit") {
  const auto tight = ParameterSpace::box(vec({0}), vec({1e-9}));
  auto f = [](const Vector& x) { return x; };
  CHECK(code_of([&] { fd_jacobian(f, tight, vec({0.5e-9}), 1e-3); }) == ErrorCode::OutOfDomain);
}

TEST_CASE("analytic and finite-difference Jacobians agree for every built-in model") {
  std::mt19937_64 rng(21);
  Matrix a0(2, 2);
  a0 << -2, 0.3, 0.1, -1.5;
  Matrix a1 = Matrix::Zero(2, 2);
  a1(0, 0) = 0.4;
  const Matrix c = Matrix::Identity(2, 2);
  const std::vector<ModelInstance> instances = {
      models::make_line({0, 1, 2.5}),
      models::make_sum_exp({1.0 / 3, 1, 3}),
      models::make_two_compartment({0.5, 1, 2}, 1.5),
      models::make_coins(),
      models::make_nonlinear_ode_summary(),
      models::make_gaussian_mixture_moments(),
  };
  for (const auto& m : instances) {
    CAPTURE(m.name);
    int checked = 0;
    while (checked < 20) {
      Vector p = sample_interior(m.space, rng);
      if (m.name == "coins") p = 0.1 + 0.8 * p.array();
      Matrix ja, jf;
      try {
        ja = jacobian(m, p, JacobianScheme::Analytic);
        jf = jacobian(m, p, JacobianScheme::CentralFd);
      } catch (const Error&) {
        continue;
      }
      CHECK(max_abs(ja - jf) / std::max(1.0, norm_inf(ja)) <= 1e-5);
      ++checked;
    }
  }
}

TEST_CASE("validate examples") {
  CHECK(validate(models::make_line({0, 1})).ok());

  auto asym = models::make_line({0, 1});
  Matrix s(2, 2);
  s << 1, 0.5, 0.2, 1;
  asym.noise = NoiseModel::gaussian(s);
  const auto rep = validate(asym);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0] == "covariance not symmetric");

  auto coins = models::make_coins();
  coins.prediction.eval = [](const Vector&) { return vec({1, 1, 0, 0, 0}); };
  const auto rep2 = validate(coins);
  REQUIRE_FALSE(rep2.ok());
  CHECK(rep2.violations.back() == "output not on simplex");

  auto badw = models::make_line({0, 1});
  badw.metric = ReferenceMetric::weighted(vec({1, 0}));
  CHECK_FALSE(validate(badw).ok());

  auto wrong_dim = models::make_line({0, 1});
  wrong_dim.noise = NoiseModel::gaussian_identity(3);
  CHECK_FALSE(validate(wrong_dim).ok());

  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  auto indef = models::make_line({0, 1});
  indef.noise = NoiseModel::gaussian(indefinite);
  CHECK(validate(indef).violations == std::vector<std::string>{"covariance not positive definite"});
}

TEST_CASE("noise whitening") {
  Matrix s(2, 2);
  s << 4, 1, 1, 2;
  const auto n = NoiseModel::gaussian(s, 3);
  const Vector x = vec({1, -2});
  const Vector w = n.whiten(x);
  CHECK(w.squaredNorm() == doctest::Approx(x.dot(s.inverse() * x)).epsilon(1e-14));
  CHECK_THROWS_AS(NoiseModel::categorical().cholesky_lower(), Error);
  CHECK_THROWS_AS(NoiseModel::gaussian_identity(2, 0), Error);
}

TEST_CASE("sample_interior stays inside and away from the bounds") {
  std::mt19937_64 rng(5);
  const auto box = ParameterSpace::box(vec({0, -kInf, -kInf}), vec({1, kInf, 3}));
  for (int k = 0; k < 200; ++k) {
    const Vector p = sample_interior(box, rng);
    CHECK(box.contains(p, 0.0));
    CHECK(p(0) > 0.0);
    CHECK(p(0) < 1.0);
    CHECK(p(2) < 3.0);
  }
}
