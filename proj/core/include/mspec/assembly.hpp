#pragma once

#include <memory>
#include <vector>

#include "mspec/propagation.hpp"
#include "mspec/system.hpp"
#include "mspec/types.hpp"

namespace mspec {

struct ProblemOptions {
  PropagationOptions propagation;
  /// Relative SVD threshold for kernels (N_0, Gram kernel).
  double kernel_tol = 1e-10;
  /// Relative SVD threshold for the pseudo-inverse of F.
  double pinv_tol = 1e-12;
  /// Relative threshold for the full-column-rank check on F at nonreal lambda.
  double rank_tol = 1e-10;
  /// Tolerance for structural validation of J, q, w and the boundary form.
  double validation_tol = 1e-10;
};

/// lambda-independent data tied to norm-zero solutions.
struct NullData {
  CMatrix basis;  ///< orthonormal basis of N_0 (columns)
  CMatrix P;      ///< orthogonal projector onto the complement of N_0
  CMatrix gram0;  ///< G(0) = integral of U(.,0)^* w U(.,0)
  Eigen::Index gram_kernel_dim = 0;
};

/// A validated problem: system, boundary data, partition, anchors and a propagator.
class SpectralProblem {
 public:
  /// Throws StructuralError when the system or boundary data fail validation.
  SpectralProblem(SystemSpec sys, BoundaryConditions bc, ProblemOptions options = {});

  const SystemSpec& system() const { return *sys_; }
  const BoundaryConditions& boundary() const { return bc_; }
  const SingularitySet& singularities() const { return sing_; }
  const std::vector<double>& anchors() const { return anchors_; }
  const Propagator& propagator() const { return *prop_; }
  const ProblemOptions& options() const { return options_; }

  Eigen::Index n() const { return sys_->n; }
  Eigen::Index N() const { return sing_.N(); }
  /// n(N+1)
  Eigen::Index block_dim() const { return n() * (N() + 1); }
  const CMatrix& script_J() const { return script_J_; }
  const CMatrix& script_J_inv() const { return script_J_inv_; }
  const NullData& null_data() const { return null_; }
  bool regular() const {
    return sys_->left.kind == EndpointKind::regular && sys_->right.kind == EndpointKind::regular;
  }

 private:
  std::shared_ptr<const SystemSpec> sys_;
  BoundaryConditions bc_;
  ProblemOptions options_;
  SingularitySet sing_;
  std::vector<double> anchors_;
  std::unique_ptr<Propagator> prop_;
  CMatrix script_J_;
  CMatrix script_J_inv_;
  NullData null_;
};

/// Per-lambda block objects.
struct BlockAssembly {
  Complex lambda;
  CMatrix B;        ///< nN x n(N+1)
  CMatrix B_tilde;  ///< B with the sign of the B_- blocks flipped
  CMatrix Q_minus;  ///< n x n(N+1)
  CMatrix Q_plus;
  CMatrix P_minus;  ///< n x n deficiency projectors
  CMatrix P_plus;
  CMatrix A_minus;  ///< n_pm x n
  CMatrix A_plus;
  CMatrix A_minus_block;  ///< n_pm x n(N+1)
  CMatrix A_plus_block;
  CMatrix P;  ///< n(N+1) projector off N_0
  CMatrix F;
  CMatrix H_left;
  CMatrix H_right;
  CMatrix H;
  /// Row equilibration D (inverse row norms of F, 1 on zero rows). Rank and condition refer to D F.
  RVector row_scale;
  Eigen::Index F_rank = 0;
  double F_condition = 0.0;

  /// D F.
  CMatrix scaled_F() const { return row_scale.asDiagonal() * F; }
  /// Left inverse (D F)^+ D of F; agrees with the Moore-Penrose inverse on the range of F.
  CMatrix left_inverse(double rel_tol) const;

  /// Row offsets of the five row blocks of F and H.
  struct Rows {
    Eigen::Index B = 0, Q_minus = 0, Q_plus = 0, A = 0, P = 0, total = 0;
  } rows;
};

/// Block matrix evaluated on the stored fundamental set at one lambda.
struct BlockB {
  CMatrix B;
  CMatrix B_tilde;
  CMatrix right_part;  ///< script_B(l) U^+ E_top
  CMatrix left_part;   ///< script_B(conj l)^* U^- E_bot
};

BlockB block_B(const SpectralProblem& p, Complex lambda);

/// Gram matrix of U(., lambda) in L^2(w): integral of U(., lambda)^* w U(., lambda).
CMatrix gram_matrix(const SpectralProblem& p, Complex lambda);

/// (basis of N_0, P).
std::pair<CMatrix, CMatrix> null_space_N0(const SpectralProblem& p);

struct RangeDim {
  Eigen::Index dim_B = 0;
  Eigen::Index dim_ran_P = 0;
  bool equal_to_ran_P = false;
};
RangeDim transform_range_dim(const SpectralProblem& p);

/// (P_-, P_+).
std::pair<CMatrix, CMatrix> deficiency_projectors(const SpectralProblem& p, Complex lambda);

struct BoundaryBlocks {
  CMatrix A_minus, A_plus, A_minus_block, A_plus_block;
};
BoundaryBlocks boundary_blocks(const SpectralProblem& p, Complex lambda);

/// Full assembly. For nonreal lambda a rank-deficient F raises TheoryViolation unless check_rank is false.
BlockAssembly assemble_F_H(const SpectralProblem& p, Complex lambda, bool check_rank = true);

}  // namespace mspec
