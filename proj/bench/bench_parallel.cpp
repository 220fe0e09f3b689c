// Serial reference against the OpenMP policy on the replicate loops.
#include <benchmark/benchmark.h>

#include <vector>

#include "smallball/functionals.hpp"
#include "smallball/simulate.hpp"
#include "smallball/smallball.hpp"

using namespace smallball;

namespace {

Exec policy(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(max_threads()));
}

void BM_SamplePathsFbm(benchmark::State& state) {
  SimConfig cfg;
  cfg.replicates = 256;
  const UniformGrid grid{0.0, 1.0 / 64, 4096};
  for (auto _ : state) {
    auto paths = sample_paths(ProcessSpec::fbm(0.7), grid, cfg, policy(state));
    benchmark::DoNotOptimize(paths.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.replicates);
  label(state);
}

void BM_SamplePathsFou(benchmark::State& state) {
  SimConfig cfg;
  cfg.replicates = 256;
  const UniformGrid grid{0.0, 1.0 / 16, 512};
  for (auto _ : state) {
    auto paths = sample_paths(ProcessSpec::fractional_ou(0.7), grid, cfg, policy(state));
    benchmark::DoNotOptimize(paths.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.replicates);
  label(state);
}

void BM_SmallBallSweep(benchmark::State& state) {
  const std::vector<double> etas{0.01, 0.02, 0.05, 0.1};
  SmallBallOptions opts;
  opts.replicates = 10000;
  opts.exec = policy(state);
  for (auto _ : state) {
    auto rows = small_ball_sweep(ProcessSpec::stationary_ou(), 0.0, 0.5, etas, opts);
    benchmark::DoNotOptimize(rows.data());
  }
  label(state);
}

void BM_Divergence(benchmark::State& state) {
  DivergenceConfig cfg;
  cfg.spec = ProcessSpec::stationary_ou();
  cfg.horizons = dyadic_horizons(1.0, 7);
  cfg.replicates = 32;
  cfg.exec = policy(state);
  for (auto _ : state) {
    auto r = divergence_experiment(cfg);
    benchmark::DoNotOptimize(r.pooled.slope);
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_SamplePathsFbm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SamplePathsFou)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmallBallSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Divergence)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
