#pragma once

#include <cmath>
#include <vector>

#include "mspec/assembly.hpp"

namespace mspec::testing {

inline CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  CMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline CMatrix standard_J() { return mat2(0, -1, 1, 0); }

inline DensitySegment constant_segment(double lo, double hi, const CMatrix& m) {
  return {lo, hi, [m](double) { return m; }, 0};
}

inline BoundaryConditions dirichlet2() {
  BoundaryConditions bc;
  bc.G_a = mat2(1, 0, 0, 0);
  bc.G_b = mat2(0, 0, 1, 0);
  return bc;
}

// Free system on (0, pi) with Dirichlet conditions, normalised at x = 0.
inline SystemSpec p1_system(bool anchor_at_zero = true) {
  SystemSpec s;
  s.n = 2;
  s.J = standard_J();
  s.a = 0.0;
  s.b = kPi;
  s.q = MatrixMeasure::zero(2, s.a, s.b);
  s.w = MatrixMeasure(2, s.a, s.b, {constant_segment(s.a, s.b, CMatrix::Identity(2, 2))}, {});
  if (anchor_at_zero) s.anchors = std::vector<double>{0.0};
  return s;
}

// P1 plus q = diag(alpha, 0) delta at pi/2.
inline SystemSpec p2_system(double alpha = 2.0) {
  SystemSpec s = p1_system();
  s.q = MatrixMeasure(2, s.a, s.b, {}, {{kPi / 2, mat2(alpha, 0, 0, 0)}});
  return s;
}

// String of unit density on (0, 1) with a point mass at 1/2: u1' = u2, -u2' = lambda m u1.
inline SystemSpec p3_system(double mass = 1.0) {
  SystemSpec s;
  s.n = 2;
  s.J = standard_J();
  s.a = 0.0;
  s.b = 1.0;
  s.q = MatrixMeasure(2, 0.0, 1.0, {constant_segment(0.0, 1.0, mat2(0, 0, 0, -1))}, {});
  s.w = MatrixMeasure(2, 0.0, 1.0, {constant_segment(0.0, 1.0, mat2(1, 0, 0, 0))}, {{0.5, mat2(mass, 0, 0, 0)}});
  s.anchors = std::vector<double>{0.0};
  return s;
}

// Degenerate atom at 0 on (-1, 1).
inline SystemSpec p4_system() {
  SystemSpec s;
  s.n = 2;
  s.J = standard_J();
  s.a = -1.0;
  s.b = 1.0;
  s.q = MatrixMeasure(2, -1.0, 1.0, {}, {{0.0, mat2(0, 0, 0, 2)}});
  s.w = MatrixMeasure(2, -1.0, 1.0, {}, {{0.0, mat2(2, 0, 0, 0)}});
  return s;
}

inline BoundaryConditions p4_boundary() {
  BoundaryConditions bc;
  bc.G_a = CMatrix(1, 2);
  bc.G_a << 0, 1;
  bc.G_b = bc.G_a;
  return bc;
}

inline SpectralProblem p1() { return SpectralProblem(p1_system(), dirichlet2()); }
inline SpectralProblem p2(double alpha = 2.0) { return SpectralProblem(p2_system(alpha), dirichlet2()); }
inline SpectralProblem p3(double mass = 1.0) { return SpectralProblem(p3_system(mass), dirichlet2()); }
inline SpectralProblem p4() { return SpectralProblem(p4_system(), p4_boundary()); }

}  // namespace mspec::testing
