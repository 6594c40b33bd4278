#include "mspec/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"

namespace mspec::ode {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (fifth minus fourth order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
  CMatrix y;
  CMatrix k7;
  double err = 0.0;
};

StepResult dp_step(const MatrixRhs& f, double t, const CMatrix& y, const CMatrix& k1, double h,
                   const Options& o) {
  const CMatrix k2 = f(t + c2 * h, y + h * (a21 * k1));
  const CMatrix k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
  const CMatrix k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const CMatrix k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const CMatrix k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  StepResult r;
  r.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  r.k7 = f(t + h, r.y);
  const CMatrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * r.k7);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y(i)), std::abs(r.y(i)));
    const double v = std::abs(err(i)) / sc;
    acc += v * v;
  }
  r.err = std::sqrt(acc / static_cast<double>(err.size()));
  return r;
}

}  // namespace

CMatrix step(const MatrixRhs& f, double t, const CMatrix& y, double h) {
  if (h == 0.0) return y;
  const CMatrix k1 = f(t, y);
  return dp_step(f, t, y, k1, h, Options{}).y;
}

std::vector<Node> integrate(const MatrixRhs& f, double t0, double t1, const CMatrix& y0,
                            const Options& options) {
  std::vector<Node> nodes{{t0, y0}};
  if (t0 == t1) return nodes;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  double t = t0;
  CMatrix y = y0;
  CMatrix k1 = f(t, y);

  // Initial step from the usual derivative-scale heuristic.
  double d0 = 0.0, d1 = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = options.abs_tol + options.rel_tol * std::abs(y(i));
    d0 = std::max(d0, std::abs(y(i)) / sc);
    d1 = std::max(d1, std::abs(k1(i)) / sc);
  }
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
  h = std::min(h, span);
  h = std::max(h, 1e-12 * span);

  for (int steps = 0; steps < options.max_steps; ++steps) {
    const double remaining = std::abs(t1 - t);
    if (remaining <= 0.0) return nodes;
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    StepResult r = dp_step(f, t, y, k1, dir * h, options);
    if (r.err <= 1.0) {
      t = last ? t1 : t + dir * h;
      y = std::move(r.y);
      k1 = std::move(r.k7);
      nodes.push_back({t, y});
      if (last) return nodes;
      const double fac = r.err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(r.err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      h *= std::clamp(0.9 * std::pow(r.err, -0.2), 0.1, 0.9);
      if (h < 1e-14 * std::max(1.0, std::abs(t))) {
        std::ostringstream msg;
        msg << "step size underflow at t=" << t;
        throw AccuracyError(msg.str(), r.err);
      }
    }
  }
  throw AccuracyError("maximum number of integration steps exceeded", std::abs(t1 - t));
}

}  // namespace mspec::ode
