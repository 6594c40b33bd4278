#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mspec::fatou {

struct DensityPiece {
  double lower = 0.0;
  double upper = 0.0;
  std::function<double(double)> h;
};

struct PointMass {
  double s = 0.0;
  double mass = 0.0;
};

/// Positive scalar measure: densities on finite or infinite segments plus point masses.
/// Point masses stand in for the singular part.
struct ScalarMeasureModel {
  std::vector<DensityPiece> pieces;
  std::vector<PointMass> atoms;

  /// Throws StructuralError for non-positive masses or empty pieces, AccuracyError when
  /// the growth integral cannot be evaluated.
  void validate() const;
  /// Integral of dmu / (t^2 + 1).
  double growth() const;
  /// True when s lies in the closure of a density piece or is an atom.
  bool in_support(double s) const;
  ScalarMeasureModel scaled(double c) const;
};

/// Bounded function with known discontinuities and sup-norm bound.
struct BoundedFunction {
  std::function<double(double)> f;
  double sup_norm = 0.0;
  std::vector<double> breakpoints;
};

/// Poisson quotient: integral of r f dmu / ((s - t)^2 + r^2) over integral of r dmu / ((s - t)^2 + r^2).
/// Densities are integrated in theta with t = s + r tan(theta); atoms are summed exactly.
/// Throws DegeneratePoint when the denominator falls below 1e-300.
double poisson_quotient(const ScalarMeasureModel& mu, const BoundedFunction& f, double s, double r);

struct FatouRow {
  double r = 0.0;
  double quotient = 0.0;
  double tail_bound = 0.0;
};

struct FatouScan {
  double s = 0.0;
  double delta = 0.0;
  std::vector<FatouRow> rows;
  /// Linear extrapolation in r from the two smallest radii.
  double limit = 0.0;
  /// |quotient - limit| non-increasing as r decreases.
  bool monotone = false;
  std::vector<std::string> caveats;
};

/// Quotients along a decreasing r schedule with the tail bound
/// 16 ||f||_inf (s^2 + 1) r / delta^2 * integral dmu / (t^2 + 1).
FatouScan fatou_convergence_scan(const ScalarMeasureModel& mu, const BoundedFunction& f, double s,
                                 const std::vector<double>& radii, double delta);

}  // namespace mspec::fatou
