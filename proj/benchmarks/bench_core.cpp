#include <benchmark/benchmark.h>

#include "adamlab/clt.hpp"
#include "adamlab/discrete.hpp"
#include "adamlab/linalg.hpp"
#include "adamlab/model.hpp"
#include "adamlab/ode.hpp"
#include "adamlab/rng.hpp"

namespace {

using namespace adamlab;

ProblemPtr quadratic(int d) {
  return make_diag_quadratic(Vec::LinSpaced(d, 1.0, 10.0), GaussianNoiseSpec{Vec::Ones(d), false});
}

void BM_ConstantStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto problem = quadratic(d);
  ConstantHyper hyper;
  AdamState z = AdamState::initial(Vec::Ones(d));
  Stream stream(1, 0);
  Vec g(d);
  std::size_t n = 0;
  for (auto _ : state) {
    problem->sample_gradient(z.x(), stream, g);
    adam_update_constant(z, ++n, hyper, g);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ConstantStep)->Arg(1)->Arg(10)->Arg(100);

void BM_DecreasingTabulated(benchmark::State& state) {
  const auto problem = quadratic(1);
  const Schedule schedule{0.5, 0.7, 4.0, 1.0, 1.0};
  const auto table = tabulate(schedule, 10000);
  std::uint64_t r = 0;
  for (auto _ : state) {
    Stream stream(7, r++);
    benchmark::DoNotOptimize(drive_tabulated(*problem, Vec::Zero(1), table, stream, 1e8));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_DecreasingTabulated);

void BM_IntegrateOde(benchmark::State& state) {
  const auto problem = make_double_well(GaussianNoiseSpec{Vec::Constant(2, 0.5), false});
  const OdeParams params{100.0, 1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate(Vec::Constant(2, 1.5), params, *problem, 10.0, 1e-3));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_IntegrateOde)->Unit(benchmark::kMillisecond);

void BM_Lyapunov(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto problem = quadratic(d);
  const Schedule schedule{0.5, 0.7, 4.0, 1.0, 1.0};
  const CltInputs in = make_clt_inputs(*problem, Vec::Zero(d), schedule);
  const Mat H = build_H(in);
  const Mat Q = build_Q(in);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(H, Q, 0.0));
}
BENCHMARK(BM_Lyapunov)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_Jacobi(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Stream stream(3, 0);
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = stream.gaussian();
  const Mat s = a * a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(s));
}
BENCHMARK(BM_Jacobi)->Arg(5)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
