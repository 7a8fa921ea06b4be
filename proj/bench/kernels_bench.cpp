// OpenMP kernels against their serial references, same inputs.

#include "degpar/field.hpp"
#include "degpar/paths.hpp"
#include "degpar/suite.hpp"
#include "degpar/weights.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace degpar;

namespace {

std::vector<double> uniform_times(double T, int cells) {
    std::vector<double> t(cells + 1);
    for (int m = 0; m <= cells; ++m) t[m] = T * m / cells;
    return t;
}

template <bool Parallel>
void BM_Simulate(benchmark::State& state) {
    const auto p = canonical_profile("rotating", 1.0);
    const auto times = uniform_times(1.0, 64);
    const auto n_paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto e = Parallel ? simulate(p, times, n_paths, 3) : reference::simulate(p, times, n_paths, 3);
        benchmark::DoNotOptimize(e);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SolveExact(benchmark::State& state) {
    const auto p = canonical_profile("anisotropic", 1.0);
    const int n = static_cast<int>(state.range(0));
    const TimeGrid tg{1.0, 16};
    const auto f = sample(bump_forcing(2, 1.0), Grid(2, n, 12.0), tg.midpoints());
    for (auto _ : state) {
        auto u = Parallel ? solve_exact(f, p) : reference::solve_exact(f, p);
        benchmark::DoNotOptimize(u);
    }
}

template <bool Parallel>
void BM_McSolution(benchmark::State& state) {
    const auto p = canonical_profile("identity", 1.0);
    const auto times = uniform_times(1.0, 64);
    const auto ensemble = simulate(p, times, static_cast<std::size_t>(state.range(0)), 5);
    const auto f = bump_forcing(2, 1.0);
    const std::vector<Probe> probes{{1.0, {0.0, 0.0}}, {0.5, {1.0, -1.0}}};
    for (auto _ : state) {
        auto r = Parallel ? mc_solution(f, p, probes, ensemble, 16) : reference::mc_solution(f, p, probes, ensemble, 16);
        benchmark::DoNotOptimize(r);
    }
}

template <bool Parallel>
void BM_AqConstant(benchmark::State& state) {
    const auto w = Weight::power(0.5);
    const int levels = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto r = Parallel ? aq_constant(w, 2.0, -1.0, 1.0, levels) : reference::aq_constant(w, 2.0, -1.0, 1.0, levels);
        benchmark::DoNotOptimize(r);
    }
}

}  // namespace

BENCHMARK(BM_Simulate<true>)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate<false>)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveExact<true>)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveExact<false>)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McSolution<true>)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McSolution<false>)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AqConstant<true>)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AqConstant<false>)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
