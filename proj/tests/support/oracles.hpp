#pragma once

// Independent reference values. Nothing here calls into the library's solvers.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using C = std::complex<double>;
using V2 = Eigen::Matrix<C, 2, 1>;
using M2 = Eigen::Matrix<C, 2, 2>;
constexpr double pi = 3.14159265358979323846;

// Free system J u' = lambda u + f with J = [[0,-1],[1,0]]: u1' = lambda u2 + f2, u2' = -lambda u1 - f1.
inline V2 free_rhs(C lambda, const V2& u, const V2& f) {
  V2 d;
  d(0) = lambda * u(1) + f(1);
  d(1) = -lambda * u(0) - f(0);
  return d;
}

/// Classical RK4 with a fixed number of steps.
inline V2 rk4(const std::function<V2(double, const V2&)>& rhs, double x0, double x1, V2 u, int steps) {
  const double h = (x1 - x0) / steps;
  double x = x0;
  for (int i = 0; i < steps; ++i) {
    const V2 k1 = rhs(x, u);
    const V2 k2 = rhs(x + h / 2, u + h / 2 * k1);
    const V2 k3 = rhs(x + h / 2, u + h / 2 * k2);
    const V2 k4 = rhs(x + h, u + h * k3);
    u += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x += h;
  }
  return u;
}

/// Closed-form fundamental matrix of the free system normalised at 0.
inline M2 p1_U(double x, C lambda) {
  M2 U;
  U << std::cos(lambda * x), std::sin(lambda * x), -std::sin(lambda * x), std::cos(lambda * x);
  return U;
}

/// P1 Dirichlet Weyl matrix, obtained by hand from the Green kernel.
inline M2 p1_M_closed(C lambda) {
  M2 M;
  M << 0.0, 0.5, 0.5, -std::cos(pi * lambda) / std::sin(pi * lambda);
  return M;
}

/// (F f)(k) for f = (1, 0) on (0, pi).
inline V2 p1_transform_of_e1(int k) {
  V2 v;
  if (k == 0) {
    v << pi, 0.0;
  } else {
    v << 0.0, (1.0 - std::pow(-1.0, k)) / k;
  }
  return v;
}

/// tau({k}) for P1 Dirichlet: eta_k = (0, 1) / sqrt(pi).
inline M2 p1_tau_atom() {
  M2 t = M2::Zero();
  t(1, 1) = 1.0 / pi;
  return t;
}

/// Sum over odd |k| > K of 4 / (pi k^2).
inline double p1_parseval_tail(int K) {
  double s = 0.0;
  for (long k = K + 1; k < 20000000; ++k) {
    if (k % 2) s += 2.0 * 4.0 / (pi * double(k) * double(k));
  }
  return s;
}

/// Shooting solution of the P1 Dirichlet problem J u' - lambda u = f with constant f on (lo, hi) in (0, pi).
/// Returns u on the grid xs (ascending, inside [0, pi]).
struct P1Shooting {
  C lambda;
  V2 f;
  double lo, hi;
  int steps_per_unit = 4000;

  V2 forcing(double x) const { return (x >= lo && x <= hi) ? f : V2::Zero(); }

  // Integrate from 0 with initial value u0 to x, splitting at the support edges.
  V2 propagate(V2 u, double x, bool forced) const {
    double at = 0.0;
    std::vector<double> stops;
    for (double e : {lo, hi}) {
      if (e > 0.0 && e < x) stops.push_back(e);
    }
    stops.push_back(x);
    for (double s : stops) {
      if (s <= at) continue;
      const double mid = 0.5 * (at + s);
      const V2 g = forced ? forcing(mid) : V2::Zero();
      auto rhs = [this, &g](double, const V2& y) {
        // J u' = lambda u + g  =>  u' = J^{-1}(lambda u + g).
        return free_rhs(lambda, y, g);
      };
      const int n = std::max(8, int(std::ceil((s - at) * steps_per_unit)));
      u = rk4(rhs, at, s, u, n);
      at = s;
    }
    return u;
  }

  V2 operator()(double x) const {
    V2 e2;
    e2 << 0.0, 1.0;
    const V2 up_pi = propagate(V2::Zero(), pi, true);
    const V2 uh_pi = propagate(e2, pi, false);
    const C c = -up_pi(0) / uh_pi(0);
    return propagate(V2::Zero(), x, true) + c * propagate(e2, x, false);
  }
};

/// M(lambda) for P1 from two shooting solves of the Dirichlet problem. With anchor 0 the Green kernel gives
/// (R f)(0+) = M (F f) - (1/2) J^{-1} (F f); F f is computed from the closed-form rotation by Simpson's rule.
inline M2 p1_M_shooting(C lambda) {
  M2 Jinv;
  Jinv << 0.0, 1.0, -1.0, 0.0;
  M2 F, R0;
  for (int col = 0; col < 2; ++col) {
    V2 f = V2::Zero();
    f(col) = 1.0;
    // Simpson for integral of U(x, conj l)^* f over (0, pi).
    const int n = 20000;
    V2 acc = V2::Zero();
    for (int i = 0; i <= n; ++i) {
      const double x = pi * i / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * (p1_U(x, std::conj(lambda)).adjoint() * f);
    }
    F.col(col) = acc * (pi / n / 3.0);
    P1Shooting s{lambda, f, 0.0, pi};
    R0.col(col) = s(0.0);
  }
  return (R0 + 0.5 * Jinv * F) * F.inverse();
}

/// P2: u1(pi) for the solution starting at (0, 1), with u2 jumping by alpha u1 at pi/2.
inline double p2_shoot(double lambda, double alpha, int steps = 20000) {
  V2 u;
  u << 0.0, 1.0;
  auto rhs = [lambda](double, const V2& y) { return free_rhs(lambda, y, V2::Zero()); };
  u = rk4(rhs, 0.0, pi / 2, u, steps);
  u(1) += alpha * u(0);
  u = rk4(rhs, pi / 2, pi, u, steps);
  return u(0).real();
}

/// Roots of p2_shoot in [lo, hi] by scanning and bisection.
inline std::vector<double> p2_eigenvalues(double lo, double hi, double alpha) {
  std::vector<double> roots;
  const double step = 0.01;
  double a = lo;
  double fa = p2_shoot(a, alpha, 2000);
  for (double b = lo + step; b <= hi + 1e-12; b += step) {
    const double fb = p2_shoot(b, alpha, 2000);
    if (fa == 0.0) roots.push_back(a);
    if (fa * fb < 0.0) {
      double l = a, r = b, fl = p2_shoot(l, alpha), fr;
      for (int i = 0; i < 80 && r - l > 1e-13; ++i) {
        const double m = 0.5 * (l + r);
        const double fm = p2_shoot(m, alpha);
        if (fl * fm <= 0.0) {
          r = m;
          fr = fm;
        } else {
          l = m;
          fl = fm;
        }
      }
      (void)fr;
      roots.push_back(0.5 * (l + r));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace oracle
