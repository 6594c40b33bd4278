#include "doctest.h"
#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"
#include "mspec/propagation.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace mspec;
using namespace mspec::testing;

namespace {

CMatrix to_dyn(const oracle::M2& m) { return CMatrix(m); }

}  // namespace

TEST_SUITE("propagation") {
  TEST_CASE("free system rotates") {
    const SpectralProblem p = p1();
    for (Complex l : {Complex(1.7, 0), Complex(2, 1), Complex(-0.4, -0.3)}) {
      const auto U = fundamental_matrix(p.propagator(), 0, l);
      for (double x : {0.0, 0.3, 1.0, 2.5, kPi}) {
        const Side side = x == kPi ? Side::left : (x == 0.0 ? Side::right : Side::balanced);
        CHECK((U->value(x, side) - to_dyn(oracle::p1_U(x, l))).norm() <= 1e-9);
      }
    }
    CVector u0(2);
    u0 << 1.0, 0.0;
    const PiecewiseSolution u = solve_ivp(p.propagator(), 0, 2.0, 0.0, u0);
    CHECK(std::abs(u.value(1.0)(0, 0) - std::cos(2.0)) <= 1e-9);
    CHECK(std::abs(u.value(1.0)(1, 0) + std::sin(2.0)) <= 1e-9);
  }

  TEST_CASE("zero coefficients at zero spectral parameter give constants") {
    const SpectralProblem p = p4();
    for (Eigen::Index j = 0; j < 2; ++j) {
      const auto U = fundamental_matrix(p.propagator(), j, 0.0);
      CHECK((U->value(j == 0 ? -0.7 : 0.7) - CMatrix::Identity(2, 2)).norm() <= 1e-15);
    }
    const CMatrix row = script_u(p.propagator(), 0.37, 0.0);
    CMatrix expect(2, 4);
    expect << 0.5, 0, 0.5, 0, 0, 0.5, 0, 0.5;
    CHECK((row - expect).norm() <= 1e-15);
    // U_1 vanishes left of the partition point, U_0 right of it.
    CHECK(script_u(p.propagator(), 0.37, -0.5).rightCols(2).norm() == 0.0);
    CHECK(script_u(p.propagator(), 0.37, 0.5).leftCols(2).norm() == 0.0);
  }

  TEST_CASE("point interaction jumps the second component") {
    const double alpha = 2.0;
    const SpectralProblem p = p2(alpha);
    const Complex l(1.3, 0.2);
    const auto U = fundamental_matrix(p.propagator(), 0, l);
    const double x = kPi / 2;
    const CMatrix left = U->value(x, Side::left);
    const CMatrix right = U->value(x, Side::right);
    CMatrix expect = left;
    expect.row(1) += alpha * left.row(0);
    CHECK((right - expect).norm() <= 1e-9);
    CHECK((U->value(x) - 0.5 * (left + right)).norm() <= 1e-15);
    CHECK(U->jump_residual() <= 1e-12);
    CHECK((left - to_dyn(oracle::p1_U(x, l))).norm() <= 1e-9);
  }

  TEST_CASE("forced initial value problem matches fixed-step integration") {
    const SpectralProblem p = p1();
    const Complex l(1.3, 0.4);
    oracle::V2 f;
    f << 1.0, oracle::C(0.5, -1.0);
    const oracle::P1Shooting ref{l, f, 0.5, 2.0};
    Forcing g = Forcing::constant(CVector(f), 0.5, 2.0);
    g.breakpoints = {0.5, 2.0};
    oracle::V2 u0;
    u0 << 0.3, -1.0;
    const PiecewiseSolution u = solve_ivp(p.propagator(), 0, l, 0.0, CVector(u0), &g);
    for (double x : {0.25, 1.0, 2.7}) {
      const oracle::V2 r = ref.propagate(u0, x, true);
      CHECK((u.value(x) - CMatrix(r)).norm() <= 1e-8);
    }
  }

  TEST_CASE("forward transforms") {
    const SpectralProblem p = p1();
    const Forcing e1 = Forcing::constant(CVector::Unit(2, 0), 0.0, kPi);
    for (int k = 0; k <= 4; ++k) {
      const CVector v = forward_transform_compact(p.propagator(), e1, double(k));
      CHECK((v - CVector(oracle::p1_transform_of_e1(k))).norm() <= 1e-10);
    }
    const SpectralProblem q = p4();
    CVector c(2);
    c << Complex(0.7, 0.1), -2.0;
    const CVector v = forward_transform_compact(q.propagator(), Forcing::constant(c, -1, 1), Complex(0.2, 1));
    CVector expect(4);
    expect << c(0), 0, c(0), 0;
    CHECK((v - expect).norm() <= 1e-14);
  }

  TEST_CASE("Wronskian identities") {
    CHECK(wronskian_defect(p1().propagator(), Complex(2, 1)) <= 1e-9);
    CHECK(wronskian_defect(p2().propagator(), Complex(0, 1)) <= 1e-9);
    CHECK(wronskian_defect(p3().propagator(), 5.0) <= 1e-9);
    CHECK(wronskian_defect(p4().propagator(), Complex(0.5, 2)) <= 1e-12);
  }

  TEST_CASE("Runge-Kutta and exponential pieces agree") {
    ProblemOptions o;
    o.propagation.exact_constant_pieces = false;
    const SpectralProblem rk(p3_system(), dirichlet2(), o);
    const SpectralProblem ex = p3();
    const Complex l(3.0, 0.5);
    for (double x : {0.2, 0.5, 0.9}) {
      CHECK((script_u(rk.propagator(), l, x) - script_u(ex.propagator(), l, x)).norm() <= 1e-8);
    }
  }

  TEST_CASE("transfer through a singular atom is refused") {
    SystemSpec s;
    s.n = 1;
    s.J = CMatrix::Constant(1, 1, Complex(0, 1));
    s.a = -1;
    s.b = 1;
    s.q = MatrixMeasure(1, -1, 1, {}, {{0.0, CMatrix::Ones(1, 1)}});
    s.w = s.q;
    // Anchored left of the atom, so continuation to the right needs B_+ invertible.
    s.anchors = std::vector<double>{-0.5};
    BoundaryConditions bc;
    bc.G_a = CMatrix::Ones(1, 1);
    bc.G_b = CMatrix::Ones(1, 1);
    const SpectralProblem p(s, bc);
    CHECK_THROWS_AS(p.propagator().fundamental_set(Complex(1, 2)), SingularTransferError);
    CHECK_NOTHROW(p.propagator().fundamental_set(Complex(1, 1)));
  }

  TEST_CASE("norm-zero directions do not depend on the spectral parameter") {
    auto check = [](const SpectralProblem& p) {
      const Eigen::Index r0 = linalg::numerical_rank(gram_matrix(p, 0.0), 1e-10);
      for (Complex l : {Complex(0, 1), Complex(1, 1), Complex(-2, 0.5)}) {
        CHECK(linalg::numerical_rank(gram_matrix(p, l), 1e-10) == r0);
      }
    };
    check(p1());
    check(p4());
  }
}
