#include <random>

#include "doctest.h"
#include "mspec/errors.hpp"
#include "mspec/system.hpp"
#include "support/problems.hpp"

using namespace mspec;
using namespace mspec::testing;

namespace {

SystemSpec scalar_atom_system() {
  SystemSpec s;
  s.n = 1;
  s.J = CMatrix::Constant(1, 1, Complex(0, 1));
  s.a = -1;
  s.b = 1;
  const CMatrix one = CMatrix::Ones(1, 1);
  s.q = MatrixMeasure(1, -1, 1, {}, {{0.0, one}});
  s.w = MatrixMeasure(1, -1, 1, {}, {{0.0, one}});
  return s;
}

}  // namespace

TEST_SUITE("system") {
  TEST_CASE("singular lambdas of the degenerate atom") {
    const SystemSpec s = p4_system();
    const SingularLambdas L = singular_lambdas_at(s, 0.0);
    CHECK(L.kind == SingularLambdas::Kind::finite);
    REQUIRE(L.roots.size() == 1);
    CHECK(std::abs(L.roots[0] - 1.0) <= 1e-12);
    CHECK(L.meets_real());
    const SingularitySet set = partition_points(s);
    CHECK(set.N() == 1);
    CHECK(set.partition[0] == 0.0);
  }

  TEST_CASE("singular lambdas of a scalar atom come in a conjugate pair") {
    const SingularLambdas L = singular_lambdas_at(scalar_atom_system(), 0.0);
    CHECK(L.kind == SingularLambdas::Kind::finite);
    REQUIRE(L.roots.size() == 2);
    CHECK(std::abs(L.roots[0] - Complex(1, -2)) <= 1e-12);
    CHECK(std::abs(L.roots[1] - Complex(1, 2)) <= 1e-12);
    CHECK_FALSE(L.meets_real());
    CHECK(partition_points(scalar_atom_system()).N() == 0);
  }

  TEST_CASE("empty and everywhere singular sets") {
    CHECK(singular_lambdas_at(p1_system(), 1.0).kind == SingularLambdas::Kind::empty);
    CHECK(partition_points(p2_system()).N() == 0);

    SystemSpec s = p4_system();
    s.q = MatrixMeasure(2, -1, 1, {}, {{0.0, mat2(0, 2, 2, 0)}});
    s.w = MatrixMeasure::zero(2, -1, 1);
    const SingularLambdas L = singular_lambdas_at(s, 0.0);
    CHECK(L.kind == SingularLambdas::Kind::all);
    CHECK(partition_points(s).N() == 1);
  }

  TEST_CASE("jump matrices") {
    const SystemSpec s = p4_system();
    auto [Bm, Bp] = jump_matrices(s, 0.0, 1.0);
    CHECK((Bp - mat2(-1, -1, 1, 1)).norm() <= 1e-15);
    std::tie(Bm, Bp) = jump_matrices(s, 0.0, 0.0);
    CHECK(std::abs(Bp.determinant() - 1.0) <= 1e-15);
    std::tie(Bm, Bp) = jump_matrices(s, 0.5, 3.0);
    CHECK((Bm - s.J).norm() == 0.0);
    CHECK((Bp - s.J).norm() == 0.0);

    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (int k = 0; k < 10; ++k) {
      const Complex l(g(rng), g(rng));
      const CMatrix m1 = jump_matrices(s, 0.0, l).first;
      const CMatrix p2 = jump_matrices(s, 0.0, std::conj(l)).second;
      CHECK((m1 + p2.adjoint()).norm() <= 1e-14);
    }
  }

  TEST_CASE("default and configured anchors") {
    SystemSpec s = p1_system(false);
    CHECK(choose_anchors(s, partition_points(s)) == std::vector<double>{kPi / 2});
    s = p4_system();
    CHECK(choose_anchors(s, partition_points(s)) == std::vector<double>{-0.5, 0.5});
    s = p2_system();
    s.anchors.reset();
    const auto a = choose_anchors(s, partition_points(s));
    REQUIRE(a.size() == 1);
    CHECK(a[0] != kPi / 2);
    CHECK(std::abs(a[0] - kPi / 2) < 0.01);
    s.anchors = std::vector<double>{kPi / 2};
    CHECK_THROWS_AS(choose_anchors(s, partition_points(s)), StructuralError);
  }

  TEST_CASE("structural validation") {
    SystemSpec s = p1_system();
    CHECK(validate_system(s).ok());
    s.J = mat2(0, 1, 1, 0);
    CHECK_FALSE(validate_system(s).ok());
    CHECK(self_adjointness_residual(p1_system(), dirichlet2()) <= 1e-15);
    BoundaryConditions bad = dirichlet2();
    bad.G_b = CMatrix::Identity(2, 2);
    CHECK_FALSE(validate_boundary(p1_system(), bad).ok());
    CHECK_THROWS_AS(SpectralProblem(p1_system(), bad), StructuralError);
  }

  TEST_CASE("partition does not depend on how segments are split") {
    SystemSpec s = p4_system();
    const auto base = partition_points(s).partition;
    s.w = MatrixMeasure(2, -1, 1,
                        {constant_segment(-1, -0.3, CMatrix::Zero(2, 2)),
                         constant_segment(-0.3, 0.7, CMatrix::Zero(2, 2)),
                         constant_segment(0.7, 1, CMatrix::Zero(2, 2))},
                        {{0.0, mat2(2, 0, 0, 0)}});
    CHECK(partition_points(s).partition == base);
  }
}
