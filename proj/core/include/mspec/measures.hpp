#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mspec/quadrature.hpp"
#include "mspec/types.hpp"

namespace mspec {

/// Interval with extended-real ends and explicit endpoint membership.
struct IntervalSpec {
  double lower = 0.0;
  double upper = 0.0;
  bool include_lower = true;
  bool include_upper = true;

  static IntervalSpec open(double lo, double hi) { return {lo, hi, false, false}; }
  static IntervalSpec closed(double lo, double hi) { return {lo, hi, true, true}; }
  bool contains(double x) const;
};

using DensityFn = std::function<CMatrix(double)>;

struct DensitySegment {
  double lower = 0.0;
  double upper = 0.0;
  DensityFn density;
  /// Polynomial degree of the density, or -1 if not polynomial. Degree 0 enables exact propagation.
  int degree_hint = -1;
};

struct Atom {
  double x = 0.0;
  CMatrix weight;
};

/// Density from ascending polynomial coefficient matrices in the global variable x.
DensityFn polynomial_density(std::vector<CMatrix> coefficients);

/// n x n matrix measure: sum of piecewise densities plus finitely many atoms inside (lower, upper).
class MatrixMeasure {
 public:
  MatrixMeasure() = default;
  /// Throws StructuralError on unsorted segments, empty segments, or misplaced atoms.
  MatrixMeasure(Eigen::Index dim, double lower, double upper, std::vector<DensitySegment> segments,
                std::vector<Atom> atoms);

  static MatrixMeasure zero(Eigen::Index dim, double lower, double upper);

  Eigen::Index dim() const { return dim_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const std::vector<DensitySegment>& segments() const { return segments_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// Atom weight at x, or zero.
  CMatrix atom_at(double x) const;
  bool has_atom(double x) const;

  /// Sum of the densities of segments whose open interior contains `probe`, evaluated at x.
  /// `probe` selects the piece so that values at segment edges are one-sided.
  CMatrix density_at(double x, double probe) const;
  CMatrix density_at(double x) const { return density_at(x, x); }

  /// True if every segment meeting (lo, hi) is constant, or none does.
  bool constant_on(double lo, double hi) const;
  /// True if no segment meets (lo, hi).
  bool density_free_on(double lo, double hi) const;

  /// Atom locations and finite segment edges, sorted and unique.
  std::vector<double> breakpoints() const;

  MatrixMeasure operator+(const MatrixMeasure& other) const;

 private:
  Eigen::Index dim_ = 0;
  double lower_ = 0.0;
  double upper_ = 0.0;
  std::vector<DensitySegment> segments_;
  std::vector<Atom> atoms_;
};

enum class MeasureKind { hermitian, nonnegative };

struct ValidationIssue {
  std::string what;
  double location = 0.0;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  void merge(const ValidationReport& other, const std::string& prefix = {});
};

/// Checks atoms and sampled density values for hermiticity (and PSD for `nonnegative`).
ValidationReport validate_measure(const MatrixMeasure& m, MeasureKind kind, double tol = 1e-10);

/// Kernel evaluated at x against a measure weight (density value or atom weight).
/// At atoms the kernel is expected to use balanced values of whatever it integrates.
using MeasureKernel = std::function<CMatrix(double x, const CMatrix& weight)>;

/// Integral of kernel(x, dm) over iv: adaptive quadrature on density segments
/// (split at atoms, segment edges and extra_breaks) plus atoms selected by the iv flags.
/// Throws AccuracyError when quadrature does not converge.
CMatrix integrate(const MatrixMeasure& m, const IntervalSpec& iv, const MeasureKernel& kernel,
                  std::span<const double> extra_breaks = {}, const QuadratureOptions& options = {});

/// g(x, side) returns the requested value of a balanced matrix function.
using BalancedFn = std::function<CMatrix(double x, Side side)>;

/// Integral of g dm with g#(x) weighting atoms.
CMatrix integrate_bv(const BalancedFn& g, const MatrixMeasure& m, const IntervalSpec& iv,
                     std::span<const double> extra_breaks = {}, const QuadratureOptions& options = {});

}  // namespace mspec
