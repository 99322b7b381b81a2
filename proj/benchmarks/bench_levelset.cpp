// Microbenchmarks for the hot paths: level-set projections, support
// evaluations, the SPG subproblem solver, and the full root-finding solve.

#include <benchmark/benchmark.h>

#include "levelset/operators.hpp"
#include "levelset/pareto.hpp"
#include "levelset/rng.hpp"
#include "levelset/spg.hpp"

namespace {

using namespace levelset;

Vector random_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

ProblemSpec random_instance(Index m, Index n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a = gaussian_matrix(m, n, 1.0 / static_cast<double>(m),
                             rng.next_u64());
  Vector x0 = Vector::Zero(n);
  for (std::size_t idx :
       rng.sample_indices(static_cast<std::size_t>(n), 10)) {
    x0[static_cast<Index>(idx)] = std::abs(rng.normal()) + 0.1;
  }
  Vector b = a * x0;
  for (Index i = 0; i < m; ++i) b[i] += 0.01 * rng.normal();
  return ProblemSpec{LinearOperator(std::move(a)), std::move(b),
                     Misfit::least_squares(), Regularizer::nonneg_one_norm()};
}

void BM_ProjectOneNorm(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  const Regularizer reg = Regularizer::one_norm();
  const Vector x = random_vector(n, 11);
  const double tau = 0.25 * x.lpNorm<1>();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.project_level_set(x, tau));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectOneNorm)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 18)
    ->Complexity(benchmark::oNLogN);

void BM_SupportQs(benchmark::State& state) {
  const Index n = static_cast<Index>(state.range(0));
  const Regularizer reg = Regularizer::qs(1.0);
  const Vector z = random_vector(n, 22);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.support_level_set(z, 2.0));
  }
}
BENCHMARK(BM_SupportQs)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 18);

void BM_SpgSubproblem(benchmark::State& state) {
  const ProblemSpec problem =
      random_instance(100, static_cast<Index>(state.range(0)), 33);
  const double tau = 5.0;
  SpgOptions opts;
  opts.tolerance = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_subproblem(problem, tau, opts));
  }
  state.SetLabel("tol=1e-8");
}
BENCHMARK(BM_SpgSubproblem)->Arg(256)->Arg(1024)
    ->Unit(benchmark::kMillisecond);

void BM_ConstrainedSolve(benchmark::State& state) {
  const ProblemSpec problem =
      random_instance(80, static_cast<Index>(state.range(0)), 44);
  const double sigma = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_constrained(problem, sigma));
  }
}
BENCHMARK(BM_ConstrainedSolve)->Arg(256)->Arg(1024)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
