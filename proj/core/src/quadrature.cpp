#include "mspec/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "mspec/errors.hpp"

namespace mspec {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208686592700, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct PanelOrder {
  bool operator()(const QuadraturePanel& x, const QuadraturePanel& y) const {
    return x.error < y.error;
  }
};

// Maps (lower, upper) with possibly infinite ends onto a finite variable.
struct VariableMap {
  enum class Kind { finite, upper_infinite, lower_infinite } kind = Kind::finite;
  double anchor = 0.0;

  double x(double t) const {
    switch (kind) {
      case Kind::upper_infinite: return anchor + t / (1.0 - t);
      case Kind::lower_infinite: return anchor - t / (1.0 - t);
      default: return t;
    }
  }
  double jacobian(double t) const {
    if (kind == Kind::finite) return 1.0;
    const double d = 1.0 - t;
    return 1.0 / (d * d);
  }
};

}  // namespace

QuadraturePanel gauss_kronrod21(const MatrixIntegrand& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double abs_half = std::abs(half);

  const CMatrix fc = f(center);
  CMatrix kronrod = fc * kWgk[10];
  CMatrix gauss = CMatrix::Zero(fc.rows(), fc.cols());
  double resabs = kWgk[10] * fc.norm();

  CMatrix values[21];
  values[10] = fc;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const CMatrix f1 = f(center - dx);
    const CMatrix f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (f1.norm() + f2.norm());
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    values[j] = f1;
    values[20 - j] = f2;
  }
  const CMatrix mean = kronrod * 0.5;
  double resasc = kWgk[10] * (fc - mean).norm();
  for (int j = 0; j < 10; ++j) {
    resasc += kWgk[j] * ((values[j] - mean).norm() + (values[20 - j] - mean).norm());
  }

  QuadraturePanel panel;
  panel.a = a;
  panel.b = b;
  panel.value = kronrod * half;
  resabs *= abs_half;
  resasc *= abs_half;
  double err = ((kronrod - gauss) * half).norm();
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    err = std::max(50.0 * kEps * resabs, err);
  }
  panel.error = err;
  panel.magnitude = resabs;
  return panel;
}

QuadratureResult integrate_adaptive(const MatrixIntegrand& f, std::span<const double> breakpoints,
                                    const QuadratureOptions& options) {
  QuadratureResult result;
  if (breakpoints.size() < 2) return result;

  std::vector<double> pts(breakpoints.begin(), breakpoints.end());
  VariableMap map;
  const bool lower_inf = std::isinf(pts.front());
  const bool upper_inf = std::isinf(pts.back());
  if (lower_inf && upper_inf) {
    // Split at zero and integrate both halves.
    std::vector<double> left, right;
    for (double p : pts) {
      if (p < 0.0) left.push_back(p);
      if (p > 0.0) right.push_back(p);
    }
    left.push_back(0.0);
    right.insert(right.begin(), 0.0);
    QuadratureResult l = integrate_adaptive(f, left, options);
    QuadratureResult r = integrate_adaptive(f, right, options);
    l.value += r.value;
    l.error += r.error;
    l.magnitude += r.magnitude;
    l.evaluations += r.evaluations;
    l.converged = l.converged && r.converged;
    l.panels.insert(l.panels.end(), r.panels.begin(), r.panels.end());
    return l;
  }
  if (upper_inf) {
    map.kind = VariableMap::Kind::upper_infinite;
    map.anchor = pts.front();
    for (auto& p : pts) p = std::isinf(p) ? 1.0 : (p - map.anchor) / (1.0 + p - map.anchor);
  } else if (lower_inf) {
    map.kind = VariableMap::Kind::lower_infinite;
    map.anchor = pts.back();
    for (auto& p : pts) p = std::isinf(p) ? 1.0 : (map.anchor - p) / (1.0 + map.anchor - p);
    std::reverse(pts.begin(), pts.end());
  }

  MatrixIntegrand g = f;
  if (map.kind != VariableMap::Kind::finite) {
    g = [&f, map](double t) -> CMatrix { return f(map.x(t)) * map.jacobian(t); };
  }

  std::priority_queue<QuadraturePanel, std::vector<QuadraturePanel>, PanelOrder> queue;
  CMatrix total;
  double total_error = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    QuadraturePanel p = gauss_kronrod21(g, pts[i], pts[i + 1]);
    result.evaluations += 21;
    total = total.size() == 0 ? p.value : CMatrix(total + p.value);
    total_error += p.error;
    magnitude += p.magnitude;
    queue.push(std::move(p));
  }
  if (queue.empty()) {
    result.value = f(0.5 * (breakpoints.front() + breakpoints.back())) * 0.0;
    result.converged = true;
    return result;
  }

  auto tolerance = [&]() { return std::max(options.abs_tol, options.rel_tol * magnitude); };
  int panel_count = static_cast<int>(queue.size());
  bool stuck = false;
  while (total_error > tolerance() && panel_count < options.max_panels) {
    QuadraturePanel worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        std::abs(worst.b - worst.a) < 1e-15 * std::max(1.0, std::abs(mid))) {
      stuck = true;
      break;
    }
    queue.pop();
    QuadraturePanel left = gauss_kronrod21(g, worst.a, mid);
    QuadraturePanel right = gauss_kronrod21(g, mid, worst.b);
    result.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    magnitude += left.magnitude + right.magnitude - worst.magnitude;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++panel_count;
  }

  // Re-sum to remove drift from the running updates.
  result.panels.reserve(queue.size());
  total_error = 0.0;
  magnitude = 0.0;
  total.setZero();
  while (!queue.empty()) {
    result.panels.push_back(queue.top());
    queue.pop();
  }
  std::sort(result.panels.begin(), result.panels.end(),
            [](const QuadraturePanel& x, const QuadraturePanel& y) { return x.a < y.a; });
  for (const auto& p : result.panels) {
    total += p.value;
    total_error += p.error;
    magnitude += p.magnitude;
  }
  result.value = total;
  result.error = total_error;
  result.magnitude = magnitude;
  result.converged = !stuck && total_error <= tolerance();
  return result;
}

CMatrix integrate(const MatrixIntegrand& f, double a, double b, const QuadratureOptions& options,
                  std::span<const double> interior_breaks) {
  std::vector<double> pts{a};
  for (double x : interior_breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  QuadratureResult r = integrate_adaptive(f, pts, options);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge (error estimate "
        << r.error << ", scale " << r.magnitude << ")";
    throw AccuracyError(msg.str(), r.error);
  }
  return r.value;
}

CumulativeIntegral::CumulativeIntegral(MatrixIntegrand f, std::vector<double> breakpoints,
                                       Eigen::Index rows, Eigen::Index cols,
                                       const QuadratureOptions& options)
    : f_(std::move(f)), zero_(CMatrix::Zero(rows, cols)) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  if (breakpoints.size() < 2) {
    edges_ = {breakpoints.empty() ? 0.0 : breakpoints.front(),
              breakpoints.empty() ? 0.0 : breakpoints.front()};
    prefix_ = {zero_, zero_};
    return;
  }
  for (double b : breakpoints) {
    if (std::isinf(b)) throw StructuralError("cumulative integral requires finite breakpoints");
  }
  QuadratureResult r = integrate_adaptive(f_, breakpoints, options);
  if (!r.converged) {
    throw AccuracyError("cumulative quadrature did not converge", r.error);
  }
  edges_.push_back(breakpoints.front());
  prefix_.push_back(zero_);
  for (const auto& p : r.panels) {
    edges_.push_back(p.b);
    prefix_.push_back(prefix_.back() + p.value);
  }
}

CMatrix CumulativeIntegral::up_to(double x) const {
  if (edges_.empty()) return zero_;
  if (x <= edges_.front()) return zero_;
  if (x >= edges_.back()) return prefix_.back();
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto i = static_cast<std::size_t>(std::distance(edges_.begin(), it) - 1);
  if (x == edges_[i]) return prefix_[i];
  return prefix_[i] + gauss_kronrod21(f_, edges_[i], x).value;
}

}  // namespace mspec
