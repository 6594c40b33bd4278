#include "mspec/weyl.hpp"

#include <algorithm>
#include <limits>

#include "mspec/linalg.hpp"

namespace mspec {

WeylSample m_function(const SpectralProblem& p, Complex lambda) {
  const BlockAssembly a = assemble_F_H(p, lambda, true);
  const CMatrix Fp = a.left_inverse(p.options().pinv_tol);
  const CMatrix right = p.script_J_inv() * a.P;
  WeylSample s;
  s.lambda = lambda;
  s.M_left = a.P * Fp * a.H_left * right;
  s.M_right = a.P * Fp * a.H_right * right;
  s.M = a.P * Fp * a.H * right;
  s.F_rank = a.F_rank;
  s.F_condition = a.F_condition;
  return s;
}

OmegaReport omega(const SpectralProblem& p, Complex lambda) {
  const BlockAssembly a = assemble_F_H(p, lambda, false);
  const BlockAssembly c = assemble_F_H(p, std::conj(lambda), false);
  const CMatrix JP = p.script_J_inv() * a.P;
  const CMatrix PJ = a.P * p.script_J_inv();
  OmegaReport r;
  r.omega = a.H * JP * c.F.adjoint() + a.F * PJ * c.H.adjoint();
  r.norm = r.omega.norm();
  const Eigen::Index off[6] = {a.rows.B, a.rows.Q_minus, a.rows.Q_plus, a.rows.A, a.rows.P, a.rows.total};
  r.block_norms = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const Eigen::Index ri = off[i + 1] - off[i];
      const Eigen::Index cj = off[j + 1] - off[j];
      if (ri > 0 && cj > 0) r.block_norms(i, j) = r.omega.block(off[i], off[j], ri, cj).norm();
    }
  }
  return r;
}

NevanlinnaReport nevanlinna_diagnostics(const SpectralProblem& p, const std::vector<Complex>& grid,
                                        bool analyticity_probe, double h) {
  NevanlinnaReport rep;
  rep.min_imag_eigenvalue = std::numeric_limits<double>::infinity();
  for (Complex l : grid) {
    NevanlinnaSample s;
    s.lambda = l;
    const CMatrix M = m_function(p, l).M;
    const CMatrix Mc = m_function(p, std::conj(l)).M;
    s.symmetry_residual = (M - Mc.adjoint()).norm();
    s.min_imag_eigenvalue = linalg::min_hermitian_eigenvalue(linalg::imaginary_part(M));
    s.omega_norm = omega(p, l).norm;
    if (analyticity_probe) {
      auto derivatives = [&](double step) {
        const Complex hr(step, 0.0);
        const Complex hi(0.0, step);
        const CMatrix dr = (m_function(p, l + hr).M - m_function(p, l - hr).M) / (2.0 * hr);
        const CMatrix di = (m_function(p, l + hi).M - m_function(p, l - hi).M) / (2.0 * hi);
        return std::make_pair(dr, di);
      };
      auto [dr1, di1] = derivatives(h);
      auto [dr2, di2] = derivatives(h / 10.0);
      // Second-order differences: Richardson with ratio 10 removes the h^2 term.
      const CMatrix dr = (100.0 * dr2 - dr1) / 99.0;
      const CMatrix di = (100.0 * di2 - di1) / 99.0;
      s.analyticity_residual = (dr - di).norm() / std::max(1.0, dr.norm());
    }
    rep.max_symmetry = std::max(rep.max_symmetry, s.symmetry_residual);
    rep.min_imag_eigenvalue = std::min(rep.min_imag_eigenvalue, s.min_imag_eigenvalue);
    rep.max_omega = std::max(rep.max_omega, s.omega_norm);
    rep.max_analyticity = std::max(rep.max_analyticity, s.analyticity_residual);
    rep.samples.push_back(s);
  }
  return rep;
}

}  // namespace mspec
