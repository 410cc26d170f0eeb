#include <benchmark/benchmark.h>

#include "tnresp/verify.hpp"

using namespace tnresp;

namespace {

TimeGrid grid_of(int n) { return TimeGrid(-8.0, 16.0 / n, n, 4); }

// Kernels are cached per grid, so this is the lookup cost after the first build.
void BM_SplitKernel(benchmark::State& st) {
    const TimeGrid g = grid_of(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(split_kernel(g, SplitSign::plus).matrix.data());
}
BENCHMARK(BM_SplitKernel)->Arg(32)->Arg(64)->Arg(128);

void BM_Propagate(benchmark::State& st) {
    const Scenario s = kerr_coherent_scenario(grid_of(64), 0.1, 1.0, static_cast<int>(st.range(0)));
    const Dynamics dyn = s.dynamics();
    const auto j = CurrentProfile::from_signal(gaussian_pulse(s.grid, 0.3, -1.0, 1.6));
    for (auto _ : st) benchmark::DoNotOptimize(propagate(dyn, j, s.grid).U.back().data());
}
BENCHMARK(BM_Propagate)->Arg(12)->Arg(16);

void BM_OrderedTensorRank2(benchmark::State& st) {
    const Scenario s = kerr_coherent_scenario(grid_of(static_cast<int>(st.range(0))), 0.1, 1.0, 12);
    const auto sys = s.system(2);
    std::vector<LegMeta> legs(2);
    legs[0].side = Side::minus;
    for (auto _ : st) benchmark::DoNotOptimize(ordered_tensor(*sys.table, legs).data.data());
}
BENCHMARK(BM_OrderedTensorRank2)->Arg(32)->Arg(64);

// Includes the rank-3 moment table build, which dominates.
void BM_AssembleSecondOrder(benchmark::State& st) {
    const Scenario s = kerr_coherent_scenario(grid_of(static_cast<int>(st.range(0))), 0.1, 1.0, 12);
    for (auto _ : st) {
        const auto sys = s.system(3);
        benchmark::DoNotOptimize(assemble_response(2, 1, sys).tensor.data.data());
    }
}
BENCHMARK(BM_AssembleSecondOrder)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_FdOracleSample(benchmark::State& st) {
    const Scenario s = kerr_coherent_scenario(grid_of(32), 0.1, 1.0, 12);
    const Dynamics dyn = s.dynamics();
    for (auto _ : st) benchmark::DoNotOptimize(fd_response_oracle(dyn, s.rho, s.grid, 2, 1, {{24, 20, 10}}));
}
BENCHMARK(BM_FdOracleSample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
