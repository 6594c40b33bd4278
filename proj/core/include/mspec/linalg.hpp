#pragma once

#include <vector>

#include "mspec/types.hpp"

namespace mspec::linalg {

/// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_max are dropped.
CMatrix pseudo_inverse(const CMatrix& a, double rel_tol = 1e-12);

/// Orthonormal basis (columns) of ker(a). A matrix with zero rows has the full space as kernel.
CMatrix null_space(const CMatrix& a, double rel_tol = 1e-10);

Eigen::Index numerical_rank(const CMatrix& a, double rel_tol = 1e-10);

RVector singular_values(const CMatrix& a);

/// Orthogonal projector onto the column span of an orthonormal basis.
CMatrix projector_onto(const CMatrix& orthonormal_basis, Eigen::Index dim);

/// Orthonormal basis of the column span of `a`.
CMatrix orthonormal_columns(const CMatrix& a, double rel_tol = 1e-10);

/// Smallest eigenvalue of the hermitian part of `a`.
double min_hermitian_eigenvalue(const CMatrix& a);

CMatrix hermitian_part(const CMatrix& a);

/// (a - a^*) / 2i.
CMatrix imaginary_part(const CMatrix& a);

/// Symmetrise and clip eigenvalues in [-clip_tol, 0) to zero. Throws TheoryViolation below -clip_tol.
CMatrix psd_projection(const CMatrix& a, double clip_tol = 1e-8);

/// Block diagonal matrix with `count` copies of `block`.
CMatrix block_diagonal(const CMatrix& block, Eigen::Index count);

/// Roots of sum_k coeffs[k] x^k via companion-matrix eigenvalues.
/// Coefficients are expected to be trimmed (nonzero leading coefficient).
std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs);

double condition_number(const CMatrix& a);

}  // namespace mspec::linalg
