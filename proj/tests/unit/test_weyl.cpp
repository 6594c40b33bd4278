#include "doctest.h"
#include "mspec/weyl.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace mspec;
using namespace mspec::testing;

TEST_SUITE("weyl") {
  TEST_CASE("free Dirichlet M against the closed form and a shooting solve") {
    const SpectralProblem p = p1();
    for (Complex l : {Complex(0, 1), Complex(0.3, 0.5), Complex(-2.2, 1.7)}) {
      const CMatrix M = m_function(p, l).M;
      CHECK((M - CMatrix(oracle::p1_M_closed(l))).norm() <= 1e-9);
    }
    const CMatrix M = m_function(p, Complex(0, 1)).M;
    CHECK((M - CMatrix(oracle::p1_M_shooting(Complex(0, 1)))).norm() <= 1e-7);
  }

  TEST_CASE("M annihilates norm-zero directions") {
    const SpectralProblem q = p4();
    const CMatrix basis = q.null_data().basis;
    REQUIRE(basis.cols() == 1);
    const CMatrix M = m_function(q, Complex(0, 1)).M;
    CHECK((M * basis).norm() <= 1e-12);
    CHECK((basis.adjoint() * M).norm() <= 1e-12);
  }

  TEST_CASE("Omega vanishes") {
    const SpectralProblem ps[] = {p1(), p2(), p3(), p4()};
    for (const auto& p : ps) {
      for (Complex l : {Complex(0, 1), Complex(1.5, 0.5), Complex(-1, 2)}) {
        const OmegaReport r = omega(p, l);
        CHECK(r.norm <= 1e-9);
        CHECK(r.block_norms.row(0).norm() <= 1e-9);
        CHECK(r.block_norms.col(0).norm() <= 1e-9);
      }
    }
  }

  TEST_CASE("Nevanlinna properties") {
    const std::vector<Complex> grid{Complex(0, 0.5), Complex(1, 1), Complex(-2, 0.25), Complex(0.5, 4)};
    const SpectralProblem ps[] = {p1(), p2(), p3(), p4()};
    for (const auto& p : ps) {
      const NevanlinnaReport r = nevanlinna_diagnostics(p, grid);
      CHECK(r.max_symmetry <= 1e-9);
      CHECK(r.min_imag_eigenvalue >= -1e-10);
    }
    const NevanlinnaReport r = nevanlinna_diagnostics(p2(), {Complex(1, 1)}, true);
    CHECK(r.max_analyticity <= 1e-6);
  }

  TEST_CASE("M takes values in the range of P") {
    const SpectralProblem q = p4();
    const CMatrix P = q.null_data().P;
    const CMatrix M = m_function(q, Complex(0.4, 1.1)).M;
    CHECK((P * M * P - M).norm() <= 1e-12);
  }
}
