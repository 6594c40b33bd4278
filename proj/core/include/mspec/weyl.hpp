#pragma once

#include <vector>

#include "mspec/assembly.hpp"
#include "mspec/types.hpp"

namespace mspec {

struct WeylSample {
  Complex lambda;
  CMatrix M;
  CMatrix M_left;
  CMatrix M_right;
  Eigen::Index F_rank = 0;
  double F_condition = 0.0;
};

/// M(lambda) = P F^+ H J^{-1} P together with the left/right variants.
WeylSample m_function(const SpectralProblem& p, Complex lambda);

struct OmegaReport {
  CMatrix omega;
  double norm = 0.0;
  /// Frobenius norms of the 5 x 5 row/column blocks (B, Q-, Q+, A, P layout).
  Eigen::MatrixXd block_norms;
};

/// Omega(l) = H(l) J^{-1} P F(conj l)^* + F(l) P J^{-1} H(conj l)^*.
OmegaReport omega(const SpectralProblem& p, Complex lambda);

struct NevanlinnaSample {
  Complex lambda;
  double symmetry_residual = 0.0;  ///< ||M(l) - M(conj l)^*||
  double min_imag_eigenvalue = 0.0;
  double omega_norm = 0.0;
  /// |dM/dl along the real direction - dM/dl along the imaginary direction|, relative.
  double analyticity_residual = 0.0;
};

struct NevanlinnaReport {
  std::vector<NevanlinnaSample> samples;
  double max_symmetry = 0.0;
  double min_imag_eigenvalue = 0.0;
  double max_omega = 0.0;
  double max_analyticity = 0.0;
};

/// Diagnostics over a grid in the upper half plane. The analyticity probe compares central
/// difference quotients in the real and imaginary directions at steps h and h/10, Richardson combined.
NevanlinnaReport nevanlinna_diagnostics(const SpectralProblem& p, const std::vector<Complex>& grid,
                                        bool analyticity_probe = false, double h = 1e-4);

}  // namespace mspec
