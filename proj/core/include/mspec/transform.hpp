#pragma once

#include <functional>
#include <vector>

#include "mspec/assembly.hpp"
#include "mspec/propagation.hpp"
#include "mspec/spectral.hpp"
#include "mspec/types.hpp"

namespace mspec {

/// A C^{n(N+1)}-valued function on the atoms of a discrete tau model.
struct TauVector {
  std::vector<double> support;
  std::vector<CVector> values;
};

/// sum over atoms of v(s)^* tau({s}) u(s).
Complex tau_inner(const SpectralMeasureModel& model, const TauVector& v, const TauVector& u);
double tau_norm(const SpectralMeasureModel& model, const TauVector& v);
/// Seminorm sqrt(d^* tau({s}) d) of a single vector at an atom.
double tau_seminorm_at(const TauAtom& atom, const CVector& d);

/// (F f)(t) at every atom of the model. A forcing with support beyond (a, b) or unbounded support
/// is exhausted by truncations [c - L, c + L] with L doubling until the tau-norm increment falls
/// below tol; growing increments raise AccuracyError.
TauVector extend_forward(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& f,
                         double tol = 1e-10);

/// (G g)(x) = sum over atoms of U(x, s) tau({s}) g(s).
class InverseTransform {
 public:
  InverseTransform(const SpectralProblem& p, const SpectralMeasureModel& model, TauVector g);
  CVector operator()(double x, Side side = Side::balanced) const;
  Forcing as_forcing() const;

 private:
  const SpectralProblem* p_;
  std::vector<FundamentalSet> U_;
  std::vector<CVector> coef_;  // tau({s}) g(s)
};

InverseTransform inverse_transform(const SpectralProblem& p, const SpectralMeasureModel& model,
                                   const TauVector& g);

struct ParsevalResult {
  double K = 0.0;
  /// ||F f||^2 in L^2(tau) over atoms with |s| <= K.
  double tau_norm_sq = 0.0;
  /// ||sum_k <u_k, f> u_k||_w^2 over eigenvalues |lambda_k| <= K, by quadrature of the expansion.
  double projection_norm_sq = 0.0;
  /// Tail estimate S(K) - S(K/2) of the monotone truncated sums.
  double tail_estimate = 0.0;
};

ParsevalResult parseval_check(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& f,
                              double K);

/// max over atoms of the tau-seminorm of (F f)(t) - t (F u)(t), for a pair with J u' + q u = w f.
double multiplication_check(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& u,
                            const Forcing& f);

/// w-norm of a function given by a balanced evaluator over (a, b).
double w_norm(const SpectralProblem& p, const std::function<CVector(double)>& g,
              const std::vector<double>& breaks = {});

}  // namespace mspec
