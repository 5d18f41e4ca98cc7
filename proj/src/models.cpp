#include "sloppykit/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sloppykit/error.hpp"
#include "sloppykit/ode.hpp"

namespace sloppykit::models {

namespace {

NoiseModel gaussian_noise(const GaussianSpec& spec, int output_dim) {
  if (spec.covariance) {
    if (spec.covariance->rows() != output_dim || spec.covariance->cols() != output_dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "covariance must be " + std::to_string(output_dim) + "x" + std::to_string(output_dim));
    }
    return NoiseModel::gaussian(*spec.covariance, spec.replicates);
  }
  return NoiseModel::gaussian_identity(output_dim, spec.replicates);
}

void require_distinct(const std::vector<double>& t) {
  const std::set<double> unique(t.begin(), t.end());
  if (unique.size() != t.size()) throw Error(ErrorCode::DuplicateTimepoints, "timepoints must be distinct");
}

void require_finite(const std::vector<double>& t, double min_value, bool strict, const char* what) {
  for (double v : t) {
    if (!std::isfinite(v) || (strict ? !(v > min_value) : !(v >= min_value))) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + ": invalid timepoint " + std::to_string(v));
    }
  }
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ModelInstance assemble(std::string name, ParameterSpace space, PredictionMap pm, NoiseModel noise) {
  ModelInstance m;
  m.name = std::move(name);
  m.space = std::move(space);
  m.prediction = std::move(pm);
  m.noise = std::move(noise);
  return m;
}

// (e^x - 1)/x and its derivative, accurate near 0.
double phi1(double x) {
  if (std::abs(x) < 1e-5) return 1.0 + x / 2.0 + x * x / 6.0;
  return std::expm1(x) / x;
}

double phi1_prime(double x) {
  if (std::abs(x) < 1e-3) return 0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0;
  return (x * std::exp(x) - std::expm1(x)) / (x * x);
}

// x^k (1 - x)^(4 - k) and its derivative.
double bernstein4(int k, double x) { return std::pow(x, k) * std::pow(1.0 - x, 4 - k); }

double bernstein4_prime(int k, double x) {
  double d = 0.0;
  if (k > 0) d += k * std::pow(x, k - 1) * std::pow(1.0 - x, 4 - k);
  if (k < 4) d -= (4 - k) * std::pow(x, k) * std::pow(1.0 - x, 3 - k);
  return d;
}

constexpr double kBinomial4[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
constexpr int kMoments = 6;

}  // namespace

ModelInstance make_line(const std::vector<double>& timepoints, const GaussianSpec& noise) {
  if (timepoints.size() < 2) throw Error(ErrorCode::InvalidArgument, "line needs at least two timepoints");
  require_finite(timepoints, 0.0, false, "line");
  require_distinct(timepoints);
  const Vector t = to_vector(timepoints);
  const int n = static_cast<int>(t.size());

  PredictionMap pm;
  pm.input_dim = 2;
  pm.output_dim = n;
  pm.eval = [t](const Vector& p) -> Vector { return (p(0) + p(1) * t.array()).matrix(); };
  pm.jacobian = [t, n](const Vector&) {
    Matrix j(n, 2);
    j.col(0).setOnes();
    j.col(1) = t;
    return j;
  };
  return assemble("line", ParameterSpace::unbounded(2), std::move(pm), gaussian_noise(noise, n));
}

ModelInstance make_sum_exp(const std::vector<double>& timepoints, const GaussianSpec& noise) {
  if (timepoints.empty()) throw Error(ErrorCode::InvalidArgument, "sum_exp needs timepoints");
  require_finite(timepoints, 0.0, true, "sum_exp");
  require_distinct(timepoints);
  const Vector t = to_vector(timepoints);
  const int n = static_cast<int>(t.size());

  PredictionMap pm;
  pm.input_dim = 2;
  pm.output_dim = n;
  pm.eval = [t](const Vector& p) -> Vector {
    return ((-p(0) * t.array()).exp() + (-p(1) * t.array()).exp()).matrix();
  };
  pm.jacobian = [t, n](const Vector& p) {
    Matrix j(n, 2);
    j.col(0) = (-t.array() * (-p(0) * t.array()).exp()).matrix();
    j.col(1) = (-t.array() * (-p(1) * t.array()).exp()).matrix();
    return j;
  };
  ParameterSpace space = ParameterSpace::box(Vector::Zero(2), Vector::Constant(2, kInf));
  return assemble("sum_exp", std::move(space), std::move(pm), gaussian_noise(noise, n));
}

ModelInstance make_two_compartment(const std::vector<double>& timepoints, double c1,
                                   const GaussianSpec& noise) {
  if (timepoints.empty()) throw Error(ErrorCode::InvalidArgument, "two_compartment needs timepoints");
  if (!(c1 > 0.0) || !std::isfinite(c1)) throw Error(ErrorCode::InvalidArgument, "c1 must be positive");
  require_finite(timepoints, 0.0, true, "two_compartment");
  require_distinct(timepoints);
  const Vector t = to_vector(timepoints);
  const int n = static_cast<int>(t.size());

  PredictionMap pm;
  pm.input_dim = 2;
  pm.output_dim = 2 * n;
  pm.eval = [t, n, c1](const Vector& p) {
    const double p1 = p(0), p2 = p(1);
    const bool confluent = std::abs(p1 - p2) < 1e-7 * std::max(1.0, std::abs(p1));
    Vector out(2 * n);
    for (int j = 0; j < n; ++j) {
      const double e1 = std::exp(-p1 * t(j));
      out(2 * j) = c1 * e1;
      out(2 * j + 1) = confluent ? c1 * p1 * t(j) * e1
                                 : c1 * p1 / (p2 - p1) * (e1 - std::exp(-p2 * t(j)));
    }
    return out;
  };
  pm.jacobian = [t, n, c1](const Vector& p) {
    const double p1 = p(0), p2 = p(1);
    Matrix jac(2 * n, 2);
    for (int j = 0; j < n; ++j) {
      const double tj = t(j);
      const double e1 = std::exp(-p1 * tj);
      // x2 = c1 p1 g with g the divided difference (e^{-p1 t} - e^{-p2 t}) / (p2 - p1).
      const double x = (p1 - p2) * tj;
      double g, dg1, dg2;
      if (std::abs(x) <= 1.0) {
        g = tj * e1 * phi1(x);
        const double dphi = phi1_prime(x);
        dg1 = -tj * g + tj * e1 * dphi * tj;
        dg2 = -tj * e1 * dphi * tj;
      } else {
        const double e2 = std::exp(-p2 * tj);
        const double d = p2 - p1;
        g = (e1 - e2) / d;
        dg1 = -tj * e1 / d + (e1 - e2) / (d * d);
        dg2 = tj * e2 / d - (e1 - e2) / (d * d);
      }
      jac(2 * j, 0) = -c1 * tj * e1;
      jac(2 * j, 1) = 0.0;
      jac(2 * j + 1, 0) = c1 * g + c1 * p1 * dg1;
      jac(2 * j + 1, 1) = c1 * p1 * dg2;
    }
    return jac;
  };
  ParameterSpace space = ParameterSpace::box(Vector::Zero(2), Vector::Constant(2, kInf));
  return assemble("two_compartment", std::move(space), std::move(pm), gaussian_noise(noise, 2 * n));
}

ModelInstance make_coins(int replicates) {
  PredictionMap pm;
  pm.input_dim = 3;
  pm.output_dim = 5;
  pm.eval = [](const Vector& p) {
    Vector rho(5);
    for (int k = 0; k < 5; ++k) {
      rho(k) = kBinomial4[k] * (p(0) * bernstein4(k, p(1)) + (1.0 - p(0)) * bernstein4(k, p(2)));
    }
    return rho;
  };
  pm.jacobian = [](const Vector& p) {
    Matrix j(5, 3);
    for (int k = 0; k < 5; ++k) {
      j(k, 0) = kBinomial4[k] * (bernstein4(k, p(1)) - bernstein4(k, p(2)));
      j(k, 1) = kBinomial4[k] * p(0) * bernstein4_prime(k, p(1));
      j(k, 2) = kBinomial4[k] * (1.0 - p(0)) * bernstein4_prime(k, p(2));
    }
    return j;
  };
  ParameterSpace space = ParameterSpace::box(Vector::Zero(3), Vector::Ones(3));
  return assemble("coins", std::move(space), std::move(pm), NoiseModel::categorical(replicates));
}

ModelInstance make_nonlinear_ode_summary(const GaussianSpec& noise) {
  auto check_domain = [](const Vector& p) {
    if (std::abs(p(1)) <= 1e-12 || std::abs(p(4)) <= 1e-12 || std::abs(p(2)) <= 1e-12) {
      throw Error(ErrorCode::Degenerate, "summary map requires p2, p3, p5 nonzero");
    }
  };
  PredictionMap pm;
  pm.input_dim = 5;
  pm.output_dim = 5;
  pm.eval = [check_domain](const Vector& p) {
    check_domain(p);
    const double p1 = p(0), p2 = p(1), p3 = p(2), p4 = p(3), p5 = p(4);
    const double s = p3 * p4 / p2;
    Vector phi(5);
    phi << s - 1.0, -2.0 * p1 * s - p3, -p5, p1 * p1 * s + p1 * p3, p1 * p5;
    return phi;
  };
  pm.jacobian = [check_domain](const Vector& p) {
    check_domain(p);
    const double p1 = p(0), p2 = p(1), p3 = p(2), p4 = p(3), p5 = p(4);
    const double s = p3 * p4 / p2;
    Matrix j = Matrix::Zero(5, 5);
    j(0, 1) = -s / p2;
    j(0, 2) = p4 / p2;
    j(0, 3) = p3 / p2;
    j(1, 0) = -2.0 * s;
    j(1, 1) = 2.0 * p1 * s / p2;
    j(1, 2) = -2.0 * p1 * p4 / p2 - 1.0;
    j(1, 3) = -2.0 * p1 * p3 / p2;
    j(2, 4) = -1.0;
    j(3, 0) = 2.0 * p1 * s + p3;
    j(3, 1) = -p1 * p1 * s / p2;
    j(3, 2) = p1 * p1 * p4 / p2 + p1;
    j(3, 3) = p1 * p1 * p3 / p2;
    j(4, 0) = p5;
    j(4, 4) = p1;
    return j;
  };
  return assemble("nonlinear_ode_summary", ParameterSpace::unbounded(5), std::move(pm),
                  gaussian_noise(noise, 5));
}

Vector nonlinear_ode_summary_inverse(const Vector& phi) {
  if (phi.size() != 5) throw Error(ErrorCode::DimensionMismatch, "summary has five entries");
  const double f1 = phi(0), f2 = phi(1), f3 = phi(2), f5 = phi(4);
  if (std::abs(f3) <= 1e-300) throw Error(ErrorCode::Degenerate, "phi_3 vanishes");
  const double p1 = -f5 / f3;
  const double p3 = -f2 + 2.0 * f5 * (1.0 + f1) / f3;
  if (std::abs(p3) <= 1e-300) throw Error(ErrorCode::Degenerate, "p3 vanishes");
  Vector out(4);
  out << p1, p3, (1.0 + f1) / p3, -f3;
  return out;
}

Vector gaussian_raw_moments(double mean, double sd, int k_max) {
  Vector m(k_max + 1);
  m(0) = 1.0;
  if (k_max >= 1) m(1) = mean;
  for (int k = 2; k <= k_max; ++k) m(k) = mean * m(k - 1) + (k - 1) * sd * sd * m(k - 2);
  return m;
}

ModelInstance make_gaussian_mixture_moments(const GaussianSpec& noise) {
  PredictionMap pm;
  pm.input_dim = 5;
  pm.output_dim = kMoments;
  pm.eval = [](const Vector& p) {
    const double lambda = p(0);
    const Vector a = gaussian_raw_moments(p(1), p(2), kMoments);
    const Vector b = gaussian_raw_moments(p(3), p(4), kMoments);
    return Vector(lambda * a.tail(kMoments) + (1.0 - lambda) * b.tail(kMoments));
  };
  pm.jacobian = [](const Vector& p) {
    // Differentiates the moment recursion with respect to (mean, sd).
    auto moments_with_partials = [](double mean, double sd) {
      Matrix out(kMoments + 1, 3);  // columns: M_k, dM_k/dmean, dM_k/dsd
      out.row(0) << 1.0, 0.0, 0.0;
      out.row(1) << mean, 1.0, 0.0;
      for (int k = 2; k <= kMoments; ++k) {
        const double c = k - 1;
        out(k, 0) = mean * out(k - 1, 0) + c * sd * sd * out(k - 2, 0);
        out(k, 1) = out(k - 1, 0) + mean * out(k - 1, 1) + c * sd * sd * out(k - 2, 1);
        out(k, 2) = mean * out(k - 1, 2) + 2.0 * c * sd * out(k - 2, 0) + c * sd * sd * out(k - 2, 2);
      }
      return out;
    };
    const double lambda = p(0);
    const Matrix a = moments_with_partials(p(1), p(2));
    const Matrix b = moments_with_partials(p(3), p(4));
    Matrix j(kMoments, 5);
    for (int k = 1; k <= kMoments; ++k) {
      j(k - 1, 0) = a(k, 0) - b(k, 0);
      j(k - 1, 1) = lambda * a(k, 1);
      j(k - 1, 2) = lambda * a(k, 2);
      j(k - 1, 3) = (1.0 - lambda) * b(k, 1);
      j(k - 1, 4) = (1.0 - lambda) * b(k, 2);
    }
    return j;
  };
  Vector lower(5), upper(5);
  lower << 0.0, -kInf, 0.0, -kInf, 0.0;
  upper << 1.0, kInf, kInf, kInf, kInf;
  return assemble("gaussian_mixture_moments", ParameterSpace::box(lower, upper), std::move(pm),
                  gaussian_noise(noise, kMoments));
}

std::function<Matrix(const Vector&)> affine_system_matrix(Matrix a0, std::vector<Matrix> terms) {
  for (const auto& t : terms) {
    if (t.rows() != a0.rows() || t.cols() != a0.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "LPV terms must match A0's shape");
    }
  }
  return [a0 = std::move(a0), terms = std::move(terms)](const Vector& p) {
    if (p.size() != static_cast<Eigen::Index>(terms.size())) {
      throw Error(ErrorCode::DimensionMismatch, "LPV parameter length differs from number of terms");
    }
    Matrix a = a0;
    for (std::size_t k = 0; k < terms.size(); ++k) a += p(static_cast<Eigen::Index>(k)) * terms[k];
    return a;
  };
}

ModelInstance make_lpv(std::function<Matrix(const Vector&)> system_matrix, const Matrix& output,
                       int param_dim, const GaussianSpec& noise,
                       std::optional<std::vector<double>> timepoints) {
  if (param_dim < 0) throw Error(ErrorCode::InvalidArgument, "param_dim must be >= 0");
  if (!system_matrix) throw Error(ErrorCode::InvalidArgument, "missing A(p)");
  const int m = static_cast<int>(output.cols());
  const int n_out = static_cast<int>(output.rows());
  if (m < 1 || n_out < 1) throw Error(ErrorCode::InvalidArgument, "C must be non-empty");

  auto sys = std::make_shared<LpvSystem>();
  sys->param_dim = param_dim;
  sys->state_dim = m;
  sys->output = output;
  sys->system_matrix = std::move(system_matrix);
  if (timepoints) {
    if (timepoints->empty()) throw Error(ErrorCode::InvalidArgument, "timepoints must be non-empty");
    require_finite(*timepoints, 0.0, false, "lpv");
    require_distinct(*timepoints);
    sys->timepoints = *timepoints;
  }

  const int r = param_dim + m;
  PredictionMap pm;
  pm.input_dim = r;
  if (sys->timepoints.empty()) {
    pm.output_dim = n_out;
    pm.eval = [](const Vector&) -> Vector {
      throw Error(ErrorCode::Unsupported, "LPV model without timepoints has no finite prediction map");
    };
  } else {
    const int n_t = static_cast<int>(sys->timepoints.size());
    pm.output_dim = n_out * n_t;
    std::shared_ptr<const LpvSystem> csys = sys;
    pm.eval = [csys, n_out, n_t](const Vector& full) {
      const auto [p, x0] = csys->split(full);
      const Matrix a = csys->hurwitz_matrix(p);
      std::vector<double> sorted = csys->timepoints;
      std::sort(sorted.begin(), sorted.end());
      Matrix states(n_t, x0.size());
      if (sorted.back() <= 0.0) {
        states.rowwise() = x0.transpose();
      } else {
        IvpSpec spec;
        spec.rhs = [&a](double, const Vector& x) { return Vector(a * x); };
        spec.x0 = x0;
        spec.t_end = sorted.back();
        spec.rel_tol = 1e-11;
        spec.abs_tol = 1e-13;
        const OdeSolution sol = solve_ivp(spec);
        for (int j = 0; j < n_t; ++j) states.row(j) = sol(sorted[j]).transpose();
      }
      Vector y(n_out * n_t);
      for (int j = 0; j < n_t; ++j) {
        const auto pos = std::lower_bound(sorted.begin(), sorted.end(), csys->timepoints[j]) - sorted.begin();
        y.segment(j * n_out, n_out) = csys->output * states.row(pos).transpose();
      }
      return y;
    };
  }
  const int n_total = pm.output_dim;
  ModelInstance model = assemble("lpv", ParameterSpace::unbounded(r), std::move(pm),
                                 gaussian_noise(noise, n_total));
  model.lpv = std::move(sys);
  return model;
}

ModelInstance make_linear(const Matrix& map, const GaussianSpec& noise) {
  if (map.rows() < 1 || map.cols() < 1) throw Error(ErrorCode::InvalidArgument, "empty linear map");
  PredictionMap pm;
  pm.input_dim = static_cast<int>(map.cols());
  pm.output_dim = static_cast<int>(map.rows());
  pm.eval = [map](const Vector& p) { return Vector(map * p); };
  pm.jacobian = [map](const Vector&) { return map; };
  return assemble("linear", ParameterSpace::unbounded(pm.input_dim), std::move(pm),
                  gaussian_noise(noise, static_cast<int>(map.rows())));
}

ModelInstance make_constant(int dim, const Vector& value, const GaussianSpec& noise) {
  if (dim < 1 || value.size() < 1) throw Error(ErrorCode::InvalidArgument, "constant map needs dim, value");
  PredictionMap pm;
  pm.input_dim = dim;
  pm.output_dim = static_cast<int>(value.size());
  pm.eval = [value](const Vector&) { return value; };
  pm.jacobian = [n = value.size(), dim](const Vector&) { return Matrix(Matrix::Zero(n, dim)); };
  return assemble("constant", ParameterSpace::unbounded(dim), std::move(pm),
                  gaussian_noise(noise, static_cast<int>(value.size())));
}

ModelInstance make_conformal(const GaussianSpec& noise) {
  PredictionMap pm;
  pm.input_dim = 2;
  pm.output_dim = 2;
  pm.eval = [](const Vector& p) {
    const double q = p(0) * p(0) + p(1) * p(1);
    Vector out(2);
    out << p(0) / q, -p(1) / q;
    return out;
  };
  pm.jacobian = [](const Vector& p) {
    const double a = p(0), b = p(1);
    const double q = a * a + b * b;
    const double q2 = q * q;
    Matrix j(2, 2);
    j << (b * b - a * a) / q2, -2.0 * a * b / q2, 2.0 * a * b / q2, (b * b - a * a) / q2;
    return j;
  };
  Vector lower(2), upper(2);
  lower << 0.5, -kInf;
  upper << kInf, kInf;
  return assemble("conformal", ParameterSpace::box(lower, upper), std::move(pm), gaussian_noise(noise, 2));
}

ModelInstance make_circle(const GaussianSpec& noise) {
  PredictionMap pm;
  pm.input_dim = 2;
  pm.output_dim = 1;
  pm.eval = [](const Vector& p) { return Vector::Constant(1, p(0) * p(0) + p(1) * p(1)).eval(); };
  pm.jacobian = [](const Vector& p) {
    Matrix j(1, 2);
    j << 2.0 * p(0), 2.0 * p(1);
    return j;
  };
  Vector lower(2), upper(2);
  lower << 0.5, -kInf;
  upper << kInf, kInf;
  return assemble("circle", ParameterSpace::box(lower, upper), std::move(pm), gaussian_noise(noise, 1));
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"line", "x(t) = a0 + a1 t at the timepoints; P = R^2",
       "timepoints: [t...] (>= 2 distinct, >= 0)", "fitting points to a line"},
      {"sum_exp", "exp(-a t) + exp(-b t) at the timepoints; P = [0, inf)^2",
       "timepoints: [t...] (distinct, > 0)", "sum of exponentials"},
      {"two_compartment", "exact two-compartment solution, output (x1(t_j), x2(t_j)); P = [0, inf)^2",
       "timepoints: [t...] (distinct, > 0); c1: > 0", "ODE system with an exact solution"},
      {"coins", "heads-count distribution of four tosses of two biased coins; P = [0, 1]^3",
       "(none; use categorical noise)", "two biased coins"},
      {"nonlinear_ode_summary", "exhaustive summary (phi_1..phi_5) of a 5-parameter nonlinear ODE",
       "(none)", "nonlinear ODE model"},
      {"gaussian_mixture_moments", "first six moments of a two-component Gaussian mixture",
       "(none)", "Gaussian mixtures"},
      {"lpv", "x' = A(p) x, y = C x with parameter (p, x0); A(p) = A0 + sum_k p_k A_k",
       "A0: [[...]]; A_terms: [[[...]]...]; C: [[...]]; timepoints: [t...] (optional)",
       "linear parameter-varying model"},
      {"linear", "phi(p) = M p on R^r", "matrix: [[...]] (N x r)", "linear prediction maps"},
      {"constant", "constant prediction map on R^dim", "dim: r; value: [v...]", "rank-zero test map"},
      {"conformal", "(a, b) -> (a, -b) / (a^2 + b^2) on [1/2, inf) x R", "(none)",
       "not sloppy infinitesimally, not practically identifiable"},
      {"circle", "(a, b) -> a^2 + b^2 on [1/2, inf) x R", "(none)",
       "bounded confidence regions, not practically identifiable"},
  };
  return entries;
}

}  // namespace sloppykit::models
