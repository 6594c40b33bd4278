#include "mspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mspec/errors.hpp"

namespace mspec::linalg {

namespace {

Eigen::BDCSVD<CMatrix> full_svd(const CMatrix& a) {
  return Eigen::BDCSVD<CMatrix>(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

}  // namespace

RVector singular_values(const CMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return RVector();
  return Eigen::BDCSVD<CMatrix>(a).singularValues();
}

CMatrix pseudo_inverse(const CMatrix& a, double rel_tol) {
  CMatrix result = CMatrix::Zero(a.cols(), a.rows());
  if (a.rows() == 0 || a.cols() == 0) return result;
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      result += svd.matrixV().col(i) * (1.0 / s(i)) * svd.matrixU().col(i).adjoint();
    }
  }
  return result;
}

Eigen::Index numerical_rank(const CMatrix& a, double rel_tol) {
  const RVector s = singular_values(a);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

CMatrix null_space(const CMatrix& a, double rel_tol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return CMatrix::Identity(n, n);
  if (n == 0) return CMatrix(0, 0);
  auto svd = full_svd(a);
  const RVector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_tol * s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

CMatrix orthonormal_columns(const CMatrix& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return CMatrix(a.rows(), 0);
  auto svd = full_svd(a);
  const RVector& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0) && s(i) > 0.0) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

CMatrix projector_onto(const CMatrix& basis, Eigen::Index dim) {
  if (basis.cols() == 0) return CMatrix::Zero(dim, dim);
  return basis * basis.adjoint();
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

CMatrix imaginary_part(const CMatrix& a) {
  return (a - a.adjoint()) / Complex(0.0, 2.0);
}

double min_hermitian_eigenvalue(const CMatrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

CMatrix psd_projection(const CMatrix& a, double clip_tol) {
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  RVector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -clip_tol) {
      throw TheoryViolation("matrix expected to be positive semidefinite has eigenvalue " +
                            std::to_string(ev(i)));
    }
    if (ev(i) < 0.0) ev(i) = 0.0;
  }
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix block_diagonal(const CMatrix& block, Eigen::Index count) {
  const Eigen::Index r = block.rows();
  const Eigen::Index c = block.cols();
  CMatrix out = CMatrix::Zero(r * count, c * count);
  for (Eigen::Index k = 0; k < count; ++k) out.block(k * r, k * c, r, c) = block;
  return out;
}

std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs) {
  if (coeffs.size() < 2) return {};
  const auto degree = static_cast<Eigen::Index>(coeffs.size() - 1);
  const Complex lead = coeffs.back();
  CMatrix companion = CMatrix::Zero(degree, degree);
  for (Eigen::Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < degree; ++i) {
    companion(i, degree - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;
  }
  Eigen::ComplexEigenSolver<CMatrix> es(companion, false);
  std::vector<Complex> roots(static_cast<std::size_t>(degree));
  for (Eigen::Index i = 0; i < degree; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  std::sort(roots.begin(), roots.end(), [](Complex x, Complex y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return roots;
}

double condition_number(const CMatrix& a) {
  const RVector s = singular_values(a);
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace mspec::linalg
