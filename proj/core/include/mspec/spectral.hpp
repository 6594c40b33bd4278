#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mspec/assembly.hpp"
#include "mspec/propagation.hpp"
#include "mspec/quadrature.hpp"
#include "mspec/types.hpp"

namespace mspec {

/// (R_lambda f)(x) through the Green kernel. The problem must outlive the resolvent.
class Resolvent {
 public:
  Resolvent(const SpectralProblem& p, Complex lambda, Forcing f);

  Complex lambda() const;
  /// (F f)(lambda).
  const CVector& transform() const;
  /// M(lambda) (F f)(lambda).
  const CVector& coefficient() const;
  CVector operator()(double x, Side side = Side::balanced) const;
  /// The balanced output as a forcing term (shares state with this resolvent).
  Forcing as_forcing() const;

 private:
  struct State;
  std::shared_ptr<const State> state_;
};

CVector resolvent_apply(const SpectralProblem& p, Complex lambda, const Forcing& f, double x,
                        Side side = Side::balanced);

/// Integrated form of J u' + (q - lambda w) u = w f between consecutive points of a uniform grid
/// (nudged off atoms): max over cells of ||J (u(x1) - u(x0)) + integral (q - lambda w) u# - integral w f#||.
/// Unbounded ends are truncated to [-window, window].
double equation_defect(const SpectralProblem& p, Complex lambda, const std::function<CVector(double, Side)>& u,
                       const Forcing& f, int grid_points = 200, double window = 10.0);

struct EpsilonSchedule {
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
};

struct AtomWeightEstimate {
  double s = 0.0;
  CMatrix weight;  ///< PSD-projected extrapolation
  CMatrix raw;     ///< extrapolation before projection
  double spread = 0.0;
  bool converged = false;
};

/// tau({s}) = lim -i eps M(s + i eps), two-term Richardson on the two smallest eps.
AtomWeightEstimate atom_weight(const SpectralProblem& p, double s, const EpsilonSchedule& sched = {});

struct StieltjesEstimate {
  double c = 0.0;
  double d = 0.0;
  CMatrix value;
  double spread = 0.0;
  bool converged = false;
  std::vector<CMatrix> per_eps;
};

/// tau([c, d)) from (1/pi) integral of Im M(s + i eps) ds with Richardson extrapolation in eps.
/// `peaks` are refinement breakpoints (known eigenvalues); when empty and the problem is regular
/// they are taken from eigen_scan on [c, d].
StieltjesEstimate stieltjes_inversion(const SpectralProblem& p, double c, double d,
                                      const EpsilonSchedule& sched = {}, std::vector<double> peaks = {},
                                      const QuadratureOptions& quad = {1e-10, 1e-12, 20000});

struct EigenScanOptions {
  /// Sampling step for sign changes and minima of the characteristic determinant.
  double step = 0.05;
  /// Accept a candidate when sigma_min(F) <= accept_tol * sigma_max(F).
  double accept_tol = 1e-8;
  /// Relative threshold for the kernel of F at an accepted root.
  double null_tol = 1e-7;
};

struct EigenPair {
  double lambda = 0.0;
  Eigen::Index multiplicity = 0;
  /// Coefficient vectors (columns), orthonormal in L^2(w) through the Gram matrix.
  CMatrix eta;
  /// sigma_min(F) / sigma_max(F) at the root.
  double residual = 0.0;
};

/// Real eigenvalues in [lo, hi] for problems with regular endpoints.
std::vector<EigenPair> eigen_scan(const SpectralProblem& p, double lo, double hi,
                                  const EigenScanOptions& options = {});

struct TauAtom {
  double s = 0.0;
  CMatrix weight;
  Eigen::Index multiplicity = 0;
  CMatrix eta;
  /// ||weight - atom_weight(s)|| when cross-validated, negative otherwise.
  double cross_check = -1.0;
};

struct SpectralMeasureModel {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<TauAtom> atoms;
  /// Sampled (1/pi) Im M(s + i eps) on a grid (inversion-only path).
  std::vector<double> density_grid;
  std::vector<CMatrix> density_samples;
  CMatrix A;
  CMatrix B;
  bool fitted = false;
  bool oracle_path = false;
  std::vector<std::string> notes;

  /// Weight at s, or an empty matrix when s is not an atom.
  const TauAtom* atom(double s) const;
};

struct ModelOptions {
  EigenScanOptions scan;
  EpsilonSchedule eps;
  bool cross_validate = true;
  double cross_tol = 1e-4;
  bool fit_constants = true;
  double density_step = 0.05;
};

/// Atoms from eigen_scan (regular problems), cross-validated against atom_weight; throws
/// TheoryViolation on disagreement. Singular problems get an inversion-only model.
SpectralMeasureModel spectral_measure_model(const SpectralProblem& p, double lo, double hi,
                                            const ModelOptions& options = {});

/// A = Re M(i); B from Im M(iy)/y at y = 25, 50 with Richardson in 1/y.
std::pair<CMatrix, CMatrix> fit_nevanlinna_constants(const SpectralProblem& p);

}  // namespace mspec
