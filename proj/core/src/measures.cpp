#include "mspec/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"

namespace mspec {

bool IntervalSpec::contains(double x) const {
  const bool above = include_lower ? x >= lower : x > lower;
  const bool below = include_upper ? x <= upper : x < upper;
  return above && below;
}

DensityFn polynomial_density(std::vector<CMatrix> coefficients) {
  return [c = std::move(coefficients)](double x) -> CMatrix {
    CMatrix acc = c.back();
    for (auto k = static_cast<std::ptrdiff_t>(c.size()) - 2; k >= 0; --k) {
      acc = acc * x + c[static_cast<std::size_t>(k)];
    }
    return acc;
  };
}

MatrixMeasure::MatrixMeasure(Eigen::Index dim, double lower, double upper,
                             std::vector<DensitySegment> segments, std::vector<Atom> atoms)
    : dim_(dim), lower_(lower), upper_(upper), segments_(std::move(segments)), atoms_(std::move(atoms)) {
  if (dim_ <= 0) throw StructuralError("measure dimension must be positive");
  if (!(lower_ < upper_)) throw StructuralError("measure domain must satisfy lower < upper");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    std::ostringstream where;
    where << "segment " << i << " [" << s.lower << ", " << s.upper << "]";
    if (!(s.lower < s.upper)) throw StructuralError(where.str() + " is empty or reversed");
    if (s.lower < lower_ || s.upper > upper_) throw StructuralError(where.str() + " leaves the domain");
    if (i > 0 && s.lower < segments_[i - 1].lower) {
      throw StructuralError(where.str() + " is out of order");
    }
    if (!s.density) throw StructuralError(where.str() + " has no density");
    const double probe = std::isfinite(s.lower) && std::isfinite(s.upper) ? 0.5 * (s.lower + s.upper)
                         : std::isfinite(s.lower)                         ? s.lower + 1.0
                         : std::isfinite(s.upper)                         ? s.upper - 1.0
                                                                          : 0.0;
    const CMatrix v = s.density(probe);
    if (v.rows() != dim_ || v.cols() != dim_) throw StructuralError(where.str() + " density has wrong shape");
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& a = atoms_[i];
    std::ostringstream where;
    where << "atom " << i << " at x=" << a.x;
    if (!(a.x > lower_ && a.x < upper_)) throw StructuralError(where.str() + " is not inside the domain");
    if (i > 0 && !(a.x > atoms_[i - 1].x)) throw StructuralError(where.str() + " breaks strict ordering");
    if (a.weight.rows() != dim_ || a.weight.cols() != dim_) {
      throw StructuralError(where.str() + " has wrong shape");
    }
  }
}

MatrixMeasure MatrixMeasure::zero(Eigen::Index dim, double lower, double upper) {
  return MatrixMeasure(dim, lower, upper, {}, {});
}

CMatrix MatrixMeasure::atom_at(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const Atom& a, double v) { return a.x < v; });
  if (it != atoms_.end() && it->x == x) return it->weight;
  return CMatrix::Zero(dim_, dim_);
}

bool MatrixMeasure::has_atom(double x) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), Atom{x, {}},
                            [](const Atom& l, const Atom& r) { return l.x < r.x; });
}

CMatrix MatrixMeasure::density_at(double x, double probe) const {
  CMatrix out = CMatrix::Zero(dim_, dim_);
  for (const auto& s : segments_) {
    if (probe > s.lower && probe < s.upper) out += s.density(x);
  }
  return out;
}

bool MatrixMeasure::constant_on(double lo, double hi) const {
  for (const auto& s : segments_) {
    if (s.upper > lo && s.lower < hi && s.degree_hint != 0) return false;
  }
  return true;
}

bool MatrixMeasure::density_free_on(double lo, double hi) const {
  for (const auto& s : segments_) {
    if (s.upper > lo && s.lower < hi) return false;
  }
  return true;
}

std::vector<double> MatrixMeasure::breakpoints() const {
  std::vector<double> out;
  for (const auto& a : atoms_) out.push_back(a.x);
  for (const auto& s : segments_) {
    if (std::isfinite(s.lower)) out.push_back(s.lower);
    if (std::isfinite(s.upper)) out.push_back(s.upper);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MatrixMeasure MatrixMeasure::operator+(const MatrixMeasure& other) const {
  if (other.dim_ != dim_ || other.lower_ != lower_ || other.upper_ != upper_) {
    throw StructuralError("cannot add measures with different dimension or domain");
  }
  std::vector<DensitySegment> segs = segments_;
  segs.insert(segs.end(), other.segments_.begin(), other.segments_.end());
  std::stable_sort(segs.begin(), segs.end(),
                   [](const DensitySegment& l, const DensitySegment& r) { return l.lower < r.lower; });
  std::vector<Atom> atoms = atoms_;
  for (const auto& a : other.atoms_) {
    auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& b) { return b.x == a.x; });
    if (it != atoms.end()) {
      it->weight += a.weight;
    } else {
      atoms.push_back(a);
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  return MatrixMeasure(dim_, lower_, upper_, std::move(segs), std::move(atoms));
}

void ValidationReport::merge(const ValidationReport& other, const std::string& prefix) {
  for (auto issue : other.issues) {
    if (!prefix.empty()) issue.what = prefix + ": " + issue.what;
    issues.push_back(std::move(issue));
  }
}

namespace {

void check_matrix(const CMatrix& m, MeasureKind kind, double tol, double x, const std::string& label,
                  ValidationReport& report) {
  // Spectral norm of the skew part.
  const RVector sv = linalg::singular_values(m - m.adjoint());
  const double asym = sv.size() ? sv(0) : 0.0;
  if (asym > tol) {
    report.issues.push_back({label + " is not hermitian", x, asym});
    return;
  }
  if (kind == MeasureKind::nonnegative) {
    const double lo = linalg::min_hermitian_eigenvalue(m);
    if (lo < -tol) report.issues.push_back({label + " is not positive semidefinite", x, lo});
  }
}

}  // namespace

ValidationReport validate_measure(const MatrixMeasure& m, MeasureKind kind, double tol) {
  ValidationReport report;
  for (const auto& a : m.atoms()) check_matrix(a.weight, kind, tol, a.x, "atom weight", report);
  constexpr int kSamples = 9;
  for (const auto& s : m.segments()) {
    double lo = s.lower;
    double hi = s.upper;
    if (!std::isfinite(lo)) lo = std::isfinite(hi) ? hi - 10.0 : -10.0;
    if (!std::isfinite(hi)) hi = lo + 20.0;
    for (int k = 0; k < kSamples; ++k) {
      const double x = lo + (hi - lo) * (k + 0.5) / kSamples;
      check_matrix(s.density(x), kind, tol, x, "density value", report);
    }
  }
  return report;
}

CMatrix integrate(const MatrixMeasure& m, const IntervalSpec& iv, const MeasureKernel& kernel,
                  std::span<const double> extra_breaks, const QuadratureOptions& options) {
  if (!(iv.lower < iv.upper)) throw StructuralError("integration interval must satisfy lower < upper");
  std::vector<double> breaks = m.breakpoints();
  breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
  std::sort(breaks.begin(), breaks.end());

  CMatrix total;
  auto accumulate = [&total](const CMatrix& v) {
    if (total.size() == 0) {
      total = v;
    } else {
      total += v;
    }
  };

  for (const auto& s : m.segments()) {
    const double lo = std::max(s.lower, iv.lower);
    const double hi = std::min(s.upper, iv.upper);
    if (!(lo < hi)) continue;
    std::vector<double> pts{lo};
    for (double b : breaks) {
      if (b > lo && b < hi) pts.push_back(b);
    }
    pts.push_back(hi);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const DensityFn& density = s.density;
    MatrixIntegrand f = [&kernel, &density](double x) { return kernel(x, density(x)); };
    QuadratureResult r = integrate_adaptive(f, pts, options);
    if (!r.converged) {
      std::ostringstream msg;
      msg << "measure quadrature on [" << lo << ", " << hi << "] did not converge (estimate " << r.error
          << ")";
      throw AccuracyError(msg.str(), r.error);
    }
    accumulate(r.value);
  }
  for (const auto& a : m.atoms()) {
    if (iv.contains(a.x)) accumulate(kernel(a.x, a.weight));
  }
  if (total.size() == 0) {
    // Nothing to integrate; probe the kernel for the result shape.
    const double probe = std::isfinite(iv.lower) ? iv.lower : (std::isfinite(iv.upper) ? iv.upper : 0.0);
    total = kernel(probe, CMatrix::Zero(m.dim(), m.dim()));
    total.setZero();
  }
  return total;
}

CMatrix integrate_bv(const BalancedFn& g, const MatrixMeasure& m, const IntervalSpec& iv,
                     std::span<const double> extra_breaks, const QuadratureOptions& options) {
  return integrate(
      m, iv, [&g](double x, const CMatrix& w) -> CMatrix { return g(x, Side::balanced) * w; },
      extra_breaks, options);
}

}  // namespace mspec
