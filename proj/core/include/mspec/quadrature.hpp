#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mspec/types.hpp"

namespace mspec {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_panels = 4000;
};

using MatrixIntegrand = std::function<CMatrix(double)>;

struct QuadraturePanel {
  double a = 0.0;
  double b = 0.0;
  CMatrix value;
  double error = 0.0;
  double magnitude = 0.0;
};

struct QuadratureResult {
  CMatrix value;
  double error = 0.0;
  /// Integral of the Frobenius norm of the integrand; the scale for rel_tol.
  double magnitude = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<QuadraturePanel> panels;
};

/// One 21-point Kronrod rule on [a, b] with the QUADPACK error heuristic.
QuadraturePanel gauss_kronrod21(const MatrixIntegrand& f, double a, double b);

/// Globally adaptive Gauss-Kronrod over consecutive breakpoints (sorted, at least two).
/// Infinite first/last breakpoints are handled by a rational change of variables;
/// panels are then reported in the mapped variable and are not meaningful to callers.
/// Never throws; check `converged`.
QuadratureResult integrate_adaptive(const MatrixIntegrand& f, std::span<const double> breakpoints,
                                    const QuadratureOptions& options = {});

/// Adaptive integral over [a, b]; throws AccuracyError when the tolerance is not met.
CMatrix integrate(const MatrixIntegrand& f, double a, double b, const QuadratureOptions& options = {},
                  std::span<const double> interior_breaks = {});

/// Table of x -> integral from lower to x of a smooth (between breakpoints) integrand.
/// Built once by adaptive quadrature; lookups cost one 21-point rule on a sub-panel.
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;
  CumulativeIntegral(MatrixIntegrand f, std::vector<double> breakpoints, Eigen::Index rows,
                     Eigen::Index cols, const QuadratureOptions& options = {});

  double lower() const { return edges_.empty() ? 0.0 : edges_.front(); }
  double upper() const { return edges_.empty() ? 0.0 : edges_.back(); }
  const CMatrix& total() const { return prefix_.back(); }
  /// Integral over (lower, x); clamps x to [lower, upper].
  CMatrix up_to(double x) const;

 private:
  MatrixIntegrand f_;
  std::vector<double> edges_;
  std::vector<CMatrix> prefix_;
  CMatrix zero_;
};

}  // namespace mspec
