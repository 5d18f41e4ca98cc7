#include "sloppykit/ode.hpp"

#include <algorithm>
#include <cmath>

#include "sloppykit/error.hpp"

namespace sloppykit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

double scaled_norm(const Vector& e, const Vector& x0, const Vector& x1, double atol, double rtol) {
  const double scale = atol + rtol * std::max(x0.cwiseAbs().maxCoeff(), x1.cwiseAbs().maxCoeff());
  return e.cwiseAbs().maxCoeff() / scale;
}

Vector eval_rhs(const OdeRhs& f, double t, const Vector& x) {
  Vector k = f(t, x);
  if (!k.allFinite()) throw Error(ErrorCode::NonFiniteState, "right-hand side is not finite");
  return k;
}

double initial_step(const IvpSpec& s, const Vector& f0) {
  const double sk = s.abs_tol + s.rel_tol * s.x0.cwiseAbs().maxCoeff();
  const double dnf = f0.cwiseAbs().maxCoeff() / sk;
  const double dny = s.x0.cwiseAbs().maxCoeff() / sk;
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
  h = std::min(h, s.t_end - s.t_start);
  const Vector x1 = s.x0 + h * f0;
  const Vector f1 = eval_rhs(s.rhs, s.t_start + h, x1);
  const double der2 = (f1 - f0).cwiseAbs().maxCoeff() / sk / h;
  const double der = std::max(der2, dnf);
  const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
  return std::min({100.0 * h, h1, s.t_end - s.t_start});
}

}  // namespace

Vector OdeSolution::operator()(double t) const {
  if (segments_.empty() || t < t_start_ - 1e-12 * std::max(1.0, std::abs(t_start_)) ||
      t > t_end_ + 1e-12 * std::max(1.0, std::abs(t_end_))) {
    throw Error(ErrorCode::OutOfDomain, "time outside the integrated span");
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double value, const Segment& s) { return value < s.t0; });
  const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  const double theta1 = 1.0 - theta;
  return s.c1 + theta * (s.c2 + theta1 * (s.c3 + theta * (s.c4 + theta1 * s.c5)));
}

OdeSolution solve_ivp(const IvpSpec& spec) {
  if (!spec.rhs) throw Error(ErrorCode::InvalidArgument, "missing right-hand side");
  if (!(spec.t_start < spec.t_end)) throw Error(ErrorCode::InvalidArgument, "t_start must be < t_end");
  for (double tol : {spec.rel_tol, spec.abs_tol}) {
    if (!(tol >= 1e-14 && tol <= 1e-2)) {
      throw Error(ErrorCode::InvalidArgument, "tolerances must lie in [1e-14, 1e-2]");
    }
  }
  if (!spec.x0.allFinite()) throw Error(ErrorCode::NonFiniteState, "initial state is not finite");

  OdeSolution sol;
  sol.t_start_ = spec.t_start;
  sol.t_end_ = spec.t_end;

  double t = spec.t_start;
  Vector x = spec.x0;
  Vector k1 = eval_rhs(spec.rhs, t, x);
  double h = initial_step(spec, k1);
  double err_old = 1e-4;
  bool last_rejected = false;

  for (long n = 0; n < kMaxOdeSteps; ++n) {
    if (t >= spec.t_end) return sol;
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));
    }
    const bool final_step = t + h >= spec.t_end;
    if (final_step) h = spec.t_end - t;

    const Vector k2 = eval_rhs(spec.rhs, t + c2 * h, x + h * a21 * k1);
    const Vector k3 = eval_rhs(spec.rhs, t + c3 * h, x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = eval_rhs(spec.rhs, t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 =
        eval_rhs(spec.rhs, t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = eval_rhs(spec.rhs, t + h,
                               x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vector x_new = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vector k7 = eval_rhs(spec.rhs, t + h, x_new);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = scaled_norm(err, x, x_new, spec.abs_tol, spec.rel_tol);

    if (en <= 1.0) {
      OdeSolution::Segment seg;
      seg.t0 = t;
      seg.h = h;
      seg.c1 = x;
      seg.c2 = x_new - x;
      seg.c3 = h * k1 - seg.c2;
      seg.c4 = seg.c2 - h * k7 - seg.c3;
      seg.c5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      sol.segments_.push_back(std::move(seg));

      t = final_step ? spec.t_end : t + h;
      x = x_new;
      k1 = k7;
      double fac = std::pow(std::max(en, 1e-10), kAlpha) / std::pow(err_old, kBeta) / kSafety;
      fac = std::clamp(fac, 1.0 / kMaxFactor, 1.0 / kMinFactor);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      err_old = std::max(en, 1e-4);
      last_rejected = false;
      h = h_new;
    } else {
      const double fac = std::min(1.0 / kMinFactor, std::pow(en, kAlpha) / kSafety);
      h /= fac;
      last_rejected = true;
    }
  }
  throw Error(ErrorCode::StepSizeUnderflow, "exceeded the maximum number of steps");
}

Matrix integrate(const IvpSpec& spec, std::span<const double> output_times) {
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    const double t = output_times[i];
    if (t < spec.t_start || t > spec.t_end) {
      throw Error(ErrorCode::OutOfDomain, "output time outside t_span");
    }
    if (i > 0 && t < output_times[i - 1]) throw Error(ErrorCode::InvalidArgument, "output times not sorted");
  }
  const OdeSolution sol = solve_ivp(spec);
  Matrix out(static_cast<Eigen::Index>(output_times.size()), spec.x0.size());
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = sol(output_times[i]).transpose();
  }
  return out;
}

namespace {

double simpson_step(const std::function<double(double)>& g, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double quadrature_l2(const std::function<Vector(double)>& f, double t_end, double tol) {
  if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  auto g = [&f](double t) {
    const double v = f(t).squaredNorm();
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "integrand is not finite");
    return v;
  };
  // A fixed pre-partition keeps narrow early transients from being skipped
  // by the first coarse Simpson estimate.
  constexpr int kPanels = 64;
  double total = 0.0;
  const double w = t_end / kPanels;
  for (int i = 0; i < kPanels; ++i) {
    const double a = i * w;
    const double b = (i + 1 == kPanels) ? t_end : a + w;
    const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_step(g, a, b, fa, fm, fb, whole, tol / kPanels, 50);
  }
  return total;
}

}  // namespace sloppykit
