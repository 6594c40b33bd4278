#include <random>

#include "doctest.h"
#include "mspec/transform.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace mspec;
using namespace mspec::testing;

namespace {

Forcing eigenfunction_one() {
  Forcing f;
  f.value = [](double x) -> CVector {
    CVector v(2);
    v << std::sin(x), std::cos(x);
    return v / std::sqrt(kPi);
  };
  f.support_lower = 0.0;
  f.support_upper = kPi;
  return f;
}

}  // namespace

TEST_SUITE("transform") {
  TEST_CASE("forward transform on the atoms") {
    const SpectralProblem p = p1();
    const SpectralMeasureModel m = spectral_measure_model(p, -3.5, 3.5);
    const TauVector v = extend_forward(p, m, Forcing::constant(CVector::Unit(2, 0), 0.0, kPi));
    REQUIRE(v.support.size() == 7);
    for (std::size_t i = 0; i < v.support.size(); ++i) {
      const int k = int(std::lround(v.support[i]));
      CHECK((v.values[i] - CVector(oracle::p1_transform_of_e1(k))).norm() <= 1e-9);
    }
    const TauVector z = extend_forward(p, m, Forcing::constant(CVector::Zero(2), 0.0, kPi));
    CHECK(tau_norm(m, z) == 0.0);
  }

  TEST_CASE("norm-zero functions transform to zero") {
    const SpectralProblem q = p4();
    const SpectralMeasureModel m = spectral_measure_model(q, -5, 5);
    const TauVector v = extend_forward(q, m, Forcing::constant(CVector::Unit(2, 1), -1, 1));
    for (const auto& x : v.values) CHECK(x.norm() <= 1e-15);
  }

  TEST_CASE("unbounded support is exhausted by truncation") {
    SystemSpec s = p4_system();
    const double inf = std::numeric_limits<double>::infinity();
    s.a = -inf;
    s.b = inf;
    s.q = MatrixMeasure(2, -inf, inf, {}, {{0.0, mat2(0, 0, 0, 2)}});
    s.w = MatrixMeasure(2, -inf, inf, {}, {{0.0, mat2(2, 0, 0, 0)}});
    const SpectralProblem q(s, p4_boundary());
    const SpectralMeasureModel m = spectral_measure_model(q, -5, 5);
    Forcing f;
    f.value = [](double x) -> CVector {
      CVector v(2);
      v << std::exp(-x * x), 1.0;
      return v;
    };
    f.support_lower = -inf;
    f.support_upper = inf;
    const TauVector v = extend_forward(q, m, f);
    REQUIRE(v.values.size() == 1);
    CVector expect(4);
    expect << 1, 0, 1, 0;
    CHECK((v.values[0] - expect).norm() <= 1e-12);
  }

  TEST_CASE("inverse transform") {
    const SpectralProblem p = p1();
    const SpectralMeasureModel m = spectral_measure_model(p, -3.5, 3.5);
    const TauAtom* one = nullptr;
    for (const auto& a : m.atoms) {
      if (std::abs(a.s - 1.0) < 1e-6) one = &a;
    }
    REQUIRE(one);
    TauVector g{{one->s}, {CVector::Unit(2, 1)}};
    const InverseTransform G = inverse_transform(p, m, g);
    for (double x : {0.3, 1.2, 2.9}) {
      CVector expect(2);
      expect << std::sin(x), std::cos(x);
      CHECK((G(x) - expect / kPi).norm() <= 1e-9);
    }
    TauVector zero{{one->s}, {CVector::Zero(2)}};
    CHECK(inverse_transform(p, m, zero)(1.0).norm() == 0.0);

    const Forcing u1 = eigenfunction_one();
    const InverseTransform back = inverse_transform(p, m, extend_forward(p, m, u1));
    for (double x : {0.3, 1.2, 2.9}) CHECK((back(x) - u1.value(x)).norm() <= 1e-8);
  }

  TEST_CASE("transform of the inverse is the identity in L2(tau)") {
    const SpectralProblem p = p2();
    const SpectralMeasureModel m = spectral_measure_model(p, -4.2, 4.2);
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    TauVector g;
    for (const auto& a : m.atoms) {
      g.support.push_back(a.s);
      CVector v(2);
      v << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
      g.values.push_back(v);
    }
    const TauVector h = extend_forward(p, m, inverse_transform(p, m, g).as_forcing());
    TauVector d = h;
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= g.values[i];
    CHECK(tau_norm(m, d) <= 1e-6 * tau_norm(m, g));
    // The inverse transform is an isometry from L2(tau) onto its range here.
    const double gn = w_norm(p, [G = inverse_transform(p, m, g)](double x) { return G(x); });
    CHECK(std::abs(gn - tau_norm(m, g)) <= 1e-6 * tau_norm(m, g));
  }

  TEST_CASE("Parseval") {
    const SpectralProblem p = p1();
    const SpectralMeasureModel m = spectral_measure_model(p, -40.5, 40.5);
    const ParsevalResult e = parseval_check(p, m, eigenfunction_one(), 1.5);
    CHECK(std::abs(e.tau_norm_sq - 1.0) <= 1e-8);
    CHECK(std::abs(e.projection_norm_sq - 1.0) <= 1e-8);

    const ParsevalResult r = parseval_check(p, m, Forcing::constant(CVector::Unit(2, 0), 0.0, kPi), 40.0);
    CHECK(std::abs(r.tau_norm_sq - (kPi - oracle::p1_parseval_tail(40))) <= 1e-6);
    CHECK(std::abs(r.projection_norm_sq - r.tau_norm_sq) <= 1e-6);

    const SpectralProblem q = p4();
    const SpectralMeasureModel m4 = spectral_measure_model(q, -5, 5);
    const ParsevalResult z = parseval_check(q, m4, Forcing::constant(CVector::Unit(2, 1), -1, 1), 5.0);
    CHECK(z.tau_norm_sq <= 1e-24);
    CHECK(z.projection_norm_sq <= 1e-24);
  }

  TEST_CASE("multiplication by the independent variable") {
    const SpectralProblem p = p1();
    const SpectralMeasureModel m = spectral_measure_model(p, -6.5, 6.5);
    const Forcing u1 = eigenfunction_one();
    CHECK(multiplication_check(p, m, u1, u1) <= 1e-9);

    const Complex l(0, 1);
    CVector c(2);
    c << 1.0, 0.0;
    const Forcing g = Forcing::constant(c, 0.0, kPi);
    const Resolvent R(p, l, g);
    const Forcing u = R.as_forcing();
    Forcing f = g;
    f.value = [R, l, c](double x) -> CVector { return c + l * R(x); };
    CHECK(multiplication_check(p, m, u, f) <= 1e-6);
  }
}
