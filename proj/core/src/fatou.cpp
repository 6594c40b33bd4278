#include "mspec/fatou.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"
#include "mspec/quadrature.hpp"

namespace mspec::fatou {

namespace {

double scalar_integral(const std::function<double(double)>& g, std::vector<double> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 2) return 0.0;
  MatrixIntegrand m = [&g](double x) -> CMatrix { return CMatrix::Constant(1, 1, g(x)); };
  QuadratureOptions o;
  o.rel_tol = 1e-13;
  o.abs_tol = 1e-300;
  o.max_panels = 20000;
  QuadratureResult r = integrate_adaptive(m, pts, o);
  if (!r.converged && r.error > 1e-11 * std::max(r.magnitude, 1e-300)) {
    throw AccuracyError("scalar quadrature did not converge", r.error);
  }
  return r.value(0, 0).real();
}

}  // namespace

void ScalarMeasureModel::validate() const {
  for (const auto& a : atoms) {
    if (!(a.mass > 0.0)) throw StructuralError("point masses must be positive");
  }
  for (const auto& p : pieces) {
    if (!(p.lower < p.upper) || !p.h) throw StructuralError("density pieces must be nonempty with a density");
  }
  const double g = growth();
  if (!std::isfinite(g)) throw AccuracyError("integral of dmu/(t^2+1) is not finite", g);
}

double ScalarMeasureModel::growth() const {
  double acc = 0.0;
  for (const auto& a : atoms) acc += a.mass / (a.s * a.s + 1.0);
  for (const auto& p : pieces) {
    // t = tan(theta) maps the weight dt/(t^2+1) to d theta.
    const double lo = std::atan(p.lower);
    const double hi = std::atan(p.upper);
    const auto& h = p.h;
    acc += scalar_integral([&h](double th) { return h(std::tan(th)); }, {lo, hi});
  }
  return acc;
}

bool ScalarMeasureModel::in_support(double s) const {
  for (const auto& a : atoms) {
    if (a.s == s) return true;
  }
  for (const auto& p : pieces) {
    if (s >= p.lower && s <= p.upper) return true;
  }
  return false;
}

ScalarMeasureModel ScalarMeasureModel::scaled(double c) const {
  ScalarMeasureModel out = *this;
  for (auto& a : out.atoms) a.mass *= c;
  for (auto& p : out.pieces) {
    auto h = p.h;
    p.h = [h, c](double t) { return c * h(t); };
  }
  return out;
}

double poisson_quotient(const ScalarMeasureModel& mu, const BoundedFunction& f, double s, double r) {
  if (!(r > 0.0)) throw ConfigError("r", "Poisson radius must be positive");
  double num = 0.0;
  double den = 0.0;
  for (const auto& a : mu.atoms) {
    const double d = s - a.s;
    const double k = r / (d * d + r * r);
    num += k * f.f(a.s) * a.mass;
    den += k * a.mass;
  }
  for (const auto& p : mu.pieces) {
    // r dt / ((s - t)^2 + r^2) = d theta under t = s + r tan(theta).
    const double lo = std::atan((p.lower - s) / r);
    const double hi = std::atan((p.upper - s) / r);
    std::vector<double> pts{lo, hi};
    for (double b : f.breakpoints) {
      const double th = std::atan((b - s) / r);
      if (th > lo && th < hi) pts.push_back(th);
    }
    const auto& h = p.h;
    const auto& g = f.f;
    num += scalar_integral([&](double th) {
      const double t = s + r * std::tan(th);
      return g(t) * h(t);
    }, pts);
    den += scalar_integral([&](double th) { return h(s + r * std::tan(th)); }, pts);
  }
  if (!(den >= 1e-300)) {
    std::ostringstream msg;
    msg << "Poisson denominator vanishes at s=" << s << ", r=" << r;
    throw DegeneratePoint(msg.str(), s);
  }
  return num / den;
}

FatouScan fatou_convergence_scan(const ScalarMeasureModel& mu, const BoundedFunction& f, double s,
                                 const std::vector<double>& radii, double delta) {
  if (!(delta > 0.0)) throw ConfigError("delta", "delta must be positive");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] < radii[i - 1])) throw ConfigError("radii", "r schedule must be strictly decreasing");
  }
  FatouScan scan;
  scan.s = s;
  scan.delta = delta;
  const double growth = mu.growth();
  for (double r : radii) {
    FatouRow row;
    row.r = r;
    row.quotient = poisson_quotient(mu, f, s, r);
    row.tail_bound = 16.0 * f.sup_norm * (s * s + 1.0) * r / (delta * delta) * growth;
    scan.rows.push_back(row);
  }
  const std::size_t m = scan.rows.size();
  if (m >= 2) {
    const auto& a = scan.rows[m - 2];
    const auto& b = scan.rows[m - 1];
    scan.limit = (a.r * b.quotient - b.r * a.quotient) / (a.r - b.r);
  } else if (m == 1) {
    scan.limit = scan.rows[0].quotient;
  }
  scan.monotone = true;
  for (std::size_t i = 1; i < m; ++i) {
    if (std::abs(scan.rows[i].quotient - scan.limit) > std::abs(scan.rows[i - 1].quotient - scan.limit) + 1e-14) {
      scan.monotone = false;
    }
  }
  if (!mu.in_support(s)) {
    scan.caveats.push_back("s lies outside the support of mu; it is not a mu-Lebesgue point");
  }
  if (!scan.monotone) scan.caveats.push_back("quotients do not approach the extrapolated limit monotonically");
  return scan;
}

}  // namespace mspec::fatou
