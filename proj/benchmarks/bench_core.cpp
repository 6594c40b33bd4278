#include <benchmark/benchmark.h>

#include "mspec/fatou.hpp"
#include "mspec/spectral.hpp"
#include "mspec/weyl.hpp"
#include "support/problems.hpp"

using namespace mspec;

namespace {

// Fresh lambdas each iteration so the fundamental-matrix cache does not hide the work.
void BM_FundamentalSetWithAtom(benchmark::State& state) {
  const SpectralProblem p = testing::p2();
  double t = 0.0;
  for (auto _ : state) {
    t += 1e-3;
    benchmark::DoNotOptimize(p.propagator().fundamental_set(Complex(t, 1.0)));
  }
}
BENCHMARK(BM_FundamentalSetWithAtom);

void BM_FundamentalSetDensity(benchmark::State& state) {
  ProblemOptions o;
  o.propagation.exact_constant_pieces = false;
  const SpectralProblem p(testing::p3_system(), testing::dirichlet2(), o);
  double t = 0.0;
  for (auto _ : state) {
    t += 1e-3;
    benchmark::DoNotOptimize(p.propagator().fundamental_set(Complex(t, 1.0)));
  }
}
BENCHMARK(BM_FundamentalSetDensity);

void BM_WeylFunction(benchmark::State& state) {
  const SpectralProblem p = state.range(0) == 1 ? testing::p1() : testing::p4();
  double t = 0.0;
  for (auto _ : state) {
    t += 1e-3;
    benchmark::DoNotOptimize(m_function(p, Complex(t, 1.0)).M);
  }
}
BENCHMARK(BM_WeylFunction)->Arg(1)->Arg(4);

void BM_EigenScan(benchmark::State& state) {
  for (auto _ : state) {
    const SpectralProblem p = testing::p2();
    benchmark::DoNotOptimize(eigen_scan(p, -double(state.range(0)), double(state.range(0))));
  }
}
BENCHMARK(BM_EigenScan)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_AtomWeight(benchmark::State& state) {
  const SpectralProblem p = testing::p1();
  for (auto _ : state) {
    p.propagator().clear_cache();
    benchmark::DoNotOptimize(atom_weight(p, 1.0).weight);
  }
}
BENCHMARK(BM_AtomWeight)->Unit(benchmark::kMicrosecond);

void BM_PoissonQuotient(benchmark::State& state) {
  fatou::ScalarMeasureModel mu{{{-1.0, 1.0, [](double) { return 1.0; }}}, {{0.0, 1.0}}};
  const fatou::BoundedFunction f{[](double t) { return t < 0 ? 1.0 : 3.0; }, 3.0, {0.0}};
  const double r = std::pow(10.0, -double(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fatou::poisson_quotient(mu, f, 0.3, r));
}
BENCHMARK(BM_PoissonQuotient)->Arg(1)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
