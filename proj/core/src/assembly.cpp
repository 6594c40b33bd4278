#include "mspec/assembly.hpp"

#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"

namespace mspec {

namespace {

std::string first_issue(const ValidationReport& r) {
  std::ostringstream msg;
  msg << r.issues.front().what << " (at " << r.issues.front().location << ", magnitude "
      << r.issues.front().magnitude << ")";
  return msg.str();
}

}  // namespace

SpectralProblem::SpectralProblem(SystemSpec sys, BoundaryConditions bc, ProblemOptions options)
    : bc_(std::move(bc)), options_(options) {
  const ValidationReport rs = validate_system(sys, options_.validation_tol);
  if (!rs.ok()) throw StructuralError("invalid system: " + first_issue(rs));
  const ValidationReport rb = validate_boundary(sys, bc_, options_.validation_tol);
  if (!rb.ok()) throw StructuralError("invalid boundary conditions: " + first_issue(rb));
  sys_ = std::make_shared<const SystemSpec>(std::move(sys));
  sing_ = partition_points(*sys_);
  anchors_ = choose_anchors(*sys_, sing_);
  prop_ = std::make_unique<Propagator>(sys_, sing_, anchors_, options_.propagation);
  script_J_ = linalg::block_diagonal(sys_->J, N() + 1);
  script_J_inv_ = linalg::block_diagonal(sys_->J.inverse(), N() + 1);

  // N_0 = ker B(0) intersected with ker G(0).
  const Eigen::Index dim = block_dim();
  null_.gram0 = gram_matrix(*this, 0.0);
  const CMatrix B0 = block_B(*this, 0.0).B;
  const CMatrix KB = linalg::null_space(B0, options_.kernel_tol);
  const double gscale = linalg::singular_values(null_.gram0).maxCoeff();
  CMatrix basis;
  if (gscale == 0.0) {
    basis = KB;
    null_.gram_kernel_dim = dim;
  } else {
    const RVector gs = linalg::singular_values(null_.gram0);
    null_.gram_kernel_dim = 0;
    for (Eigen::Index i = 0; i < gs.size(); ++i) {
      if (gs(i) <= options_.kernel_tol * gscale) ++null_.gram_kernel_dim;
    }
    const CMatrix GK = null_.gram0 * KB;
    if (KB.cols() == 0) {
      basis = KB;
    } else {
      Eigen::BDCSVD<CMatrix> svd(GK, Eigen::ComputeFullV);
      const RVector s = svd.singularValues();
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > options_.kernel_tol * gscale) ++r;
      }
      basis = KB * svd.matrixV().rightCols(KB.cols() - r);
    }
  }
  null_.basis = basis.cols() > 0 ? linalg::orthonormal_columns(basis) : CMatrix(dim, 0);
  null_.P = CMatrix::Identity(dim, dim) - null_.basis * null_.basis.adjoint();
}

CMatrix gram_matrix(const SpectralProblem& p, Complex lambda) {
  const SystemSpec& sys = p.system();
  const FundamentalSet U = p.propagator().fundamental_set(lambda);
  auto kernel = [&U](double x, const CMatrix& W) -> CMatrix {
    const CMatrix u = U.script_u(x, Side::balanced);
    return u.adjoint() * W * u;
  };
  const auto& breaks = p.propagator().breakpoints();
  CMatrix g = integrate(sys.w, IntervalSpec::open(sys.a, sys.b), kernel, breaks,
                        p.propagator().options().quadrature);
  return 0.5 * (g + g.adjoint().eval());
}

BlockB block_B(const SpectralProblem& p, Complex lambda) {
  const Eigen::Index n = p.n();
  const Eigen::Index N = p.N();
  const Eigen::Index dim = p.block_dim();
  BlockB out;
  out.right_part = CMatrix::Zero(n * N, dim);
  out.left_part = CMatrix::Zero(n * N, dim);
  if (N > 0) {
    const FundamentalSet U = p.propagator().fundamental_set(lambda);
    for (Eigen::Index k = 1; k <= N; ++k) {
      const double x = p.singularities().partition[static_cast<std::size_t>(k - 1)];
      auto [Bm, Bp] = jump_matrices(p.system(), x, lambda);
      // script_B(conj l)^* = diag(B_+(x_k, conj l)^*) = -diag(B_-(x_k, l)).
      out.left_part.block((k - 1) * n, (k - 1) * n, n, n) = -Bm * U.block(k - 1).value(x, Side::left);
      out.right_part.block((k - 1) * n, k * n, n, n) = Bp * U.block(k).value(x, Side::right);
    }
  }
  out.B = out.right_part + out.left_part;
  out.B_tilde = out.right_part - out.left_part;
  return out;
}

std::pair<CMatrix, CMatrix> null_space_N0(const SpectralProblem& p) {
  return {p.null_data().basis, p.null_data().P};
}

RangeDim transform_range_dim(const SpectralProblem& p) {
  RangeDim r;
  r.dim_B = p.block_dim() - p.null_data().gram_kernel_dim;
  r.dim_ran_P = p.block_dim() - p.null_data().basis.cols();
  r.equal_to_ran_P = r.dim_B == r.dim_ran_P;
  return r;
}

std::pair<CMatrix, CMatrix> deficiency_projectors(const SpectralProblem& p, Complex lambda) {
  const Eigen::Index n = p.n();
  auto projector = [n, lambda](const EndpointData& e, const char* which) -> CMatrix {
    if (e.kind == EndpointKind::regular) return CMatrix::Identity(n, n);
    if (!e.l2_span) throw ConfigError(which, "singular endpoint without square-integrable span");
    const CMatrix span = e.l2_span(lambda);
    if (span.rows() != n) throw ConfigError(which, "square-integrable span has wrong row count");
    if (span.cols() == 0) return CMatrix::Zero(n, n);
    const CMatrix basis = linalg::orthonormal_columns(span);
    return linalg::projector_onto(basis, n);
  };
  return {projector(p.system().left, "endpoints.a"), projector(p.system().right, "endpoints.b")};
}

BoundaryBlocks boundary_blocks(const SpectralProblem& p, Complex lambda) {
  const SystemSpec& sys = p.system();
  const BoundaryConditions& bc = p.boundary();
  const Eigen::Index n = p.n();
  const Eigen::Index dim = p.block_dim();
  const Eigen::Index m = bc.count();
  auto [Pm, Pp] = deficiency_projectors(p, lambda);
  const FundamentalSet U = p.propagator().fundamental_set(lambda);

  CMatrix gu_a, gu_b;
  if (sys.left.kind == EndpointKind::regular) {
    gu_a = bc.G_a * U.block(0).value(sys.a, Side::right);
  } else {
    if (!bc.limit_a) throw ConfigError("boundary.a", "singular endpoint needs a limit evaluator");
    gu_a = bc.limit_a(lambda);
  }
  if (sys.right.kind == EndpointKind::regular) {
    gu_b = bc.G_b * U.block(U.size() - 1).value(sys.b, Side::left);
  } else {
    if (!bc.limit_b) throw ConfigError("boundary.b", "singular endpoint needs a limit evaluator");
    gu_b = bc.limit_b(lambda);
  }
  BoundaryBlocks out;
  out.A_minus = -gu_a * Pm;
  out.A_plus = gu_b * Pp;
  out.A_minus_block = CMatrix::Zero(m, dim);
  out.A_plus_block = CMatrix::Zero(m, dim);
  out.A_minus_block.leftCols(n) = out.A_minus;
  out.A_plus_block.rightCols(n) = out.A_plus;
  return out;
}

BlockAssembly assemble_F_H(const SpectralProblem& p, Complex lambda, bool check_rank) {
  const Eigen::Index n = p.n();
  const Eigen::Index N = p.N();
  const Eigen::Index dim = p.block_dim();
  const Eigen::Index m = p.boundary().count();

  BlockAssembly a;
  a.lambda = lambda;
  const BlockB bb = block_B(p, lambda);
  a.B = bb.B;
  a.B_tilde = bb.B_tilde;
  std::tie(a.P_minus, a.P_plus) = deficiency_projectors(p, lambda);
  const CMatrix I = CMatrix::Identity(n, n);
  a.Q_minus = CMatrix::Zero(n, dim);
  a.Q_plus = CMatrix::Zero(n, dim);
  a.Q_minus.leftCols(n) = I - a.P_minus;
  a.Q_plus.rightCols(n) = I - a.P_plus;
  const BoundaryBlocks bl = boundary_blocks(p, lambda);
  a.A_minus = bl.A_minus;
  a.A_plus = bl.A_plus;
  a.A_minus_block = bl.A_minus_block;
  a.A_plus_block = bl.A_plus_block;
  a.P = p.null_data().P;

  a.rows.B = 0;
  a.rows.Q_minus = n * N;
  a.rows.Q_plus = a.rows.Q_minus + n;
  a.rows.A = a.rows.Q_plus + n;
  a.rows.P = a.rows.A + m;
  a.rows.total = a.rows.P + dim;

  const Eigen::Index R = a.rows.total;
  a.F = CMatrix::Zero(R, dim);
  a.H_left = CMatrix::Zero(R, dim);
  a.H_right = CMatrix::Zero(R, dim);

  a.F.middleRows(a.rows.B, n * N) = a.B;
  a.F.middleRows(a.rows.Q_minus, n) = a.Q_minus;
  a.F.middleRows(a.rows.Q_plus, n) = a.Q_plus;
  a.F.middleRows(a.rows.A, m) = a.A_plus_block + a.A_minus_block;
  a.F.middleRows(a.rows.P, dim) = CMatrix::Identity(dim, dim) - a.P;

  a.H_left.middleRows(a.rows.B, n * N) = -bb.left_part;
  a.H_left.middleRows(a.rows.Q_plus, n) = -a.Q_plus;
  a.H_left.middleRows(a.rows.A, m) = -a.A_plus_block;

  a.H_right.middleRows(a.rows.B, n * N) = bb.right_part;
  a.H_right.middleRows(a.rows.Q_minus, n) = a.Q_minus;
  a.H_right.middleRows(a.rows.A, m) = a.A_minus_block;

  a.H = 0.5 * (a.H_left + a.H_right);

  // Large |Im lambda| makes the boundary rows grow exponentially; equilibrate before judging rank.
  a.row_scale = RVector::Ones(a.F.rows());
  for (Eigen::Index i = 0; i < a.F.rows(); ++i) {
    const double r = a.F.row(i).norm();
    if (r > 0.0) a.row_scale(i) = 1.0 / r;
  }
  const RVector s = linalg::singular_values(a.scaled_F());
  const double smax = s.size() ? s(0) : 0.0;
  a.F_rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > p.options().rank_tol * smax) ++a.F_rank;
  }
  a.F_condition = (s.size() && s(s.size() - 1) > 0.0) ? smax / s(s.size() - 1)
                                                      : std::numeric_limits<double>::infinity();
  if (check_rank && lambda.imag() != 0.0 && a.F_rank < dim) {
    std::ostringstream msg;
    msg << "F(lambda) lost full column rank at lambda=" << lambda << " (rank " << a.F_rank << " < "
        << dim << ")";
    throw TheoryViolation(msg.str());
  }
  return a;
}

CMatrix BlockAssembly::left_inverse(double rel_tol) const {
  return linalg::pseudo_inverse(scaled_F(), rel_tol) * row_scale.asDiagonal();
}

}  // namespace mspec
