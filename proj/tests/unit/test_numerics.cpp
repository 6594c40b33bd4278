#include <cmath>
#include <random>

#include "doctest.h"
#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"
#include "mspec/ode.hpp"
#include "mspec/quadrature.hpp"

using namespace mspec;

namespace {

CMatrix scalar(Complex v) { return CMatrix::Constant(1, 1, v); }

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("Gauss-Kronrod is exact on polynomials of moderate degree") {
    const auto f = [](double x) { return scalar(std::pow(x, 20) - 3.0 * x + 1.0); };
    const QuadraturePanel p = gauss_kronrod21(f, -1.0, 2.0);
    const double exact = (std::pow(2.0, 21) + 1.0) / 21.0 - 1.5 * (4.0 - 1.0) + 3.0;
    CHECK(std::abs(p.value(0, 0) - exact) <= 1e-9 * exact);
  }

  TEST_CASE("adaptive quadrature on infinite ranges and kinks") {
    const auto gauss = [](double x) { return scalar(std::exp(-x * x)); };
    const double inf = std::numeric_limits<double>::infinity();
    const double b1[] = {-inf, inf};
    QuadratureResult r = integrate_adaptive(gauss, b1);
    CHECK(r.converged);
    CHECK(std::abs(r.value(0, 0) - std::sqrt(kPi)) <= 1e-10);

    const auto kink = [](double x) { return scalar(std::abs(x - 0.3)); };
    const double b2[] = {0.0, 0.3, 1.0};
    r = integrate_adaptive(kink, b2);
    CHECK(std::abs(r.value(0, 0) - (0.09 + 0.49) / 2.0) <= 1e-13);
  }

  TEST_CASE("cumulative integral agrees with the closed form") {
    CumulativeIntegral c([](double x) { return scalar(std::cos(x)); }, {0.0, 1.0, 3.0}, 1, 1);
    for (double x : {0.0, 0.4, 1.0, 2.2, 3.0}) CHECK(std::abs(c.up_to(x)(0, 0) - std::sin(x)) <= 1e-11);
  }

  TEST_CASE("Dormand-Prince integrates a rotation in both directions") {
    CMatrix A(2, 2);
    A << 0.0, 2.0, -2.0, 0.0;
    const ode::MatrixRhs f = [&A](double, const CMatrix& y) -> CMatrix { return A * y; };
    const CMatrix I = CMatrix::Identity(2, 2);
    const auto fwd = ode::integrate(f, 0.0, 1.5, I);
    CHECK(std::abs(fwd.back().y(0, 0) - std::cos(3.0)) <= 1e-9);
    CHECK(std::abs(fwd.back().y(0, 1) - std::sin(3.0)) <= 1e-9);
    const auto back = ode::integrate(f, 1.5, 0.0, fwd.back().y);
    CHECK((back.back().y - I).norm() <= 1e-9);
  }

  TEST_CASE("ode step limit raises AccuracyError") {
    const ode::MatrixRhs f = [](double, const CMatrix& y) -> CMatrix { return 50.0 * y; };
    ode::Options o;
    o.max_steps = 5;
    CHECK_THROWS_AS(ode::integrate(f, 0.0, 10.0, CMatrix::Identity(1, 1), o), AccuracyError);
  }

  TEST_CASE("linear algebra helpers") {
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    CMatrix a(5, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
    const CMatrix p = linalg::pseudo_inverse(a, 1e-12);
    CHECK((p * a - CMatrix::Identity(3, 3)).norm() <= 1e-12);
    CHECK(linalg::numerical_rank(a, 1e-12) == 3);

    CMatrix r(2, 3);
    r << 1, 2, 3, 2, 4, 6;
    const CMatrix k = linalg::null_space(r, 1e-12);
    CHECK(k.cols() == 2);
    CHECK((r * k).norm() <= 1e-12);

    // (lambda - 1)(lambda - 2i)
    const auto roots = linalg::polynomial_roots({Complex(0, 2), Complex(-1, -2), 1.0});
    REQUIRE(roots.size() == 2);
    CHECK(std::abs(roots[0] - Complex(0, 2)) <= 1e-12);
    CHECK(std::abs(roots[1] - 1.0) <= 1e-12);

    CMatrix bad(2, 2);
    bad << 1.0, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(linalg::psd_projection(bad, 1e-8), TheoryViolation);
    bad(1, 1) = -1e-10;
    CHECK(linalg::psd_projection(bad, 1e-8)(1, 1) == Complex(0.0));
  }
}
