#include <benchmark/benchmark.h>

#include "dualcusum/batch.hpp"
#include "dualcusum/dist.hpp"
#include "dualcusum/optim.hpp"
#include "dualcusum/perf.hpp"
#include "dualcusum/renewal.hpp"
#include "dualcusum/sim.hpp"

using namespace dualcusum;

namespace {

void BM_MeanFptGaussian(benchmark::State& state) {
    const auto law = make_law(DistributionSpec::gaussian(-0.5, 1.0));
    SolverOptions opts;
    opts.intervals = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_mean_fpt(*law, 8.0, opts).law.mean_fpt);
    }
}
BENCHMARK(BM_MeanFptGaussian)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_MeanFptPareto(benchmark::State& state) {
    const auto law = make_law(moment_matched_spec(Family::Pareto, -0.5, 1.0, 2.1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_mean_fpt(*law, 8.0).law.mean_fpt);
    }
}
BENCHMARK(BM_MeanFptPareto)->Unit(benchmark::kMillisecond);

void BM_MeanOvershoot(benchmark::State& state) {
    const auto law = make_law(DistributionSpec::gaussian(-0.3, 1.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_mean_overshoot(*law, 8.0).mean);
    }
}
BENCHMARK(BM_MeanOvershoot)->Unit(benchmark::kMillisecond);

void BM_BatchLawLight(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(batch_law_light(1.2, -0.3, 1.0).mean);
    }
}
BENCHMARK(BM_BatchLawLight)->Unit(benchmark::kMicrosecond);

void BM_AnalyzeGaussian(benchmark::State& state) {
    NetworkConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(analyze(cfg).pfa);
    }
}
BENCHMARK(BM_AnalyzeGaussian)->Unit(benchmark::kMillisecond);

void BM_RunOnce(benchmark::State& state) {
    NetworkConfig cfg;
    cfg.sensors = static_cast<int>(state.range(0));
    cfg.rho = 0.01;
    Rng rng = make_stream(1, 0);
    std::int64_t slots = 0;
    for (auto _ : state) {
        const auto o = run_once(cfg, rng);
        slots += o.tau;
    }
    state.counters["slots/s"] = benchmark::Counter(static_cast<double>(slots), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RunOnce)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_OptimizeSmallGrid(benchmark::State& state) {
    NetworkConfig tmpl;
    tmpl.pre = DistributionSpec::gaussian(-0.5, 1.0);
    tmpl.post = DistributionSpec::gaussian(0.5, 1.0);
    tmpl.rho = 5e-4;
    ConstraintSpec c;
    c.alpha = 1e-2;
    c.beta = {5.0, 20.0, 4};
    c.gamma = {3.0, 9.0, 4};
    c.b = {0.4, 1.0, 3};
    c.I = {1.0, 4.0, 4, true};
    c.refinements = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimize(tmpl, c).report.edd);
    }
}
BENCHMARK(BM_OptimizeSmallGrid)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
