#include <algorithm>

#include "doctest.h"
#include "mspec/spectral.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace mspec;
using namespace mspec::testing;

namespace {

// Symmetric string modes: tan(t) = 1 / (t m) with lambda = (2 t)^2.
std::vector<double> string_eigenvalues(double hi) {
  std::vector<double> out;
  for (int m = 1; (2 * kPi * m) * (2 * kPi * m) <= hi; ++m) out.push_back((2 * kPi * m) * (2 * kPi * m));
  for (int j = 0;; ++j) {
    double lo = j * kPi + 1e-12;
    double up = j * kPi + kPi / 2 - 1e-12;
    auto g = [](double t) { return std::tan(t) - 1.0 / t; };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + up);
      (g(mid) < 0 ? lo : up) = mid;
    }
    const double l = 4 * lo * lo;
    if (l > hi) break;
    out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("resolvent agrees with a shooting solve") {
    const SpectralProblem p = p1();
    oracle::V2 f;
    f << 1.0, oracle::C(0.5, 0.0);
    const Complex l(0, 1);
    const oracle::P1Shooting ref{l, f, 0.5, 2.0};
    Forcing g = Forcing::constant(CVector(f), 0.5, 2.0);
    g.breakpoints = {0.5, 2.0};
    const Resolvent R(p, l, g);
    for (double x : {0.3, 1.0, 2.5}) CHECK((R(x) - CVector(ref(x))).norm() <= 1e-7);
  }

  TEST_CASE("resolvent solves the equation across an atom") {
    const SpectralProblem p = p2();
    const Complex l(0.7, 0.9);
    CVector c(2);
    c << 1.0, Complex(0, -1);
    const Forcing f = Forcing::constant(c, 0.2, 2.9);
    const Resolvent R(p, l, f);
    CHECK(equation_defect(p, l, [&R](double x, Side s) { return R(x, s); }, f) <= 1e-8);
  }

  TEST_CASE("resolvent identity") {
    const SpectralProblem p = p2();
    const Complex l(0.3, 1), m(-0.2, 2);
    CVector c(2);
    c << 0.4, 1.0;
    const Forcing f = Forcing::constant(c, 0.0, kPi);
    const Resolvent Rl(p, l, f);
    const Resolvent Rm(p, m, f);
    const Resolvent RlRm(p, l, Rm.as_forcing());
    for (double x : {0.4, 2.0, 3.0}) {
      const CVector lhs = Rl(x) - Rm(x);
      CHECK((lhs - (l - m) * RlRm(x)).norm() <= 1e-7);
    }
  }

  TEST_CASE("atom weights of the free Dirichlet problem") {
    const SpectralProblem p = p1();
    const CMatrix tau = CMatrix(oracle::p1_tau_atom());
    CHECK((atom_weight(p, 1.0).weight - tau).norm() <= 1e-6);
    CHECK((atom_weight(p, 0.0).weight - tau).norm() <= 1e-6);
    CHECK((atom_weight(p, -2.0).weight - tau).norm() <= 1e-6);
    CHECK(atom_weight(p, 0.5).weight.norm() <= 1e-6);
  }

  TEST_CASE("Stieltjes inversion") {
    const SpectralProblem p = p1();
    const CMatrix tau = CMatrix(oracle::p1_tau_atom());
    CHECK((stieltjes_inversion(p, 0.5, 1.5).value - tau).norm() <= 1e-4);
    CHECK(stieltjes_inversion(p, 0.2, 0.8).value.norm() <= 1e-4);
    CHECK((stieltjes_inversion(p, -1.5, 1.5).value - 3.0 * tau).norm() <= 1e-4);
  }

  TEST_CASE("eigenvalues of the free Dirichlet problem") {
    const auto pairs = eigen_scan(p1(), -5.5, 5.5);
    REQUIRE(pairs.size() == 11);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(std::abs(pairs[i].lambda - (int(i) - 5)) <= 1e-9);
      CHECK(pairs[i].multiplicity == 1);
      CHECK(std::abs(pairs[i].eta(0, 0)) <= 1e-9);
      CHECK(std::abs(std::abs(pairs[i].eta(1, 0)) - 1.0 / std::sqrt(kPi)) <= 1e-9);
    }
  }

  TEST_CASE("eigenvalues with a point interaction") {
    const auto ref = oracle::p2_eigenvalues(-5.0, 5.0, 2.0);
    const auto pairs = eigen_scan(p2(), -5.0, 5.0);
    REQUIRE(pairs.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(pairs[i].lambda - ref[i]) <= 1e-7);
      const double t = pairs[i].lambda * kPi;
      CHECK(std::abs(std::sin(t) + 2.0 * std::pow(std::sin(t / 2), 2)) <= 1e-9);
    }
  }

  TEST_CASE("string with a point mass") {
    const auto ref = string_eigenvalues(100.0);
    const auto pairs = eigen_scan(p3(), -1.0, 100.0);
    REQUIRE(pairs.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(pairs[i].lambda - ref[i]) <= 1e-7 * ref[i]);
  }

  TEST_CASE("spectral measure models") {
    const SpectralMeasureModel m = spectral_measure_model(p1(), -3.5, 3.5);
    REQUIRE(m.atoms.size() == 7);
    for (const auto& a : m.atoms) {
      CHECK(std::abs(a.weight.trace() - 1.0 / kPi) <= 1e-9);
      CHECK(a.cross_check >= 0.0);
      CHECK(a.cross_check <= 1e-4);
    }
    CHECK(spectral_measure_model(p1(), 0.2, 0.8).atoms.empty());

    const SpectralProblem q = p4();
    const SpectralMeasureModel m4 = spectral_measure_model(q, -5, 5);
    REQUIRE(m4.atoms.size() == 1);
    CHECK(m4.atoms[0].s == doctest::Approx(0.0));
    const CMatrix P = q.null_data().P;
    CHECK((P * m4.atoms[0].weight * P - m4.atoms[0].weight).norm() <= 1e-12);
  }
}
