#include <benchmark/benchmark.h>

#include "hdlp/scan.hpp"
#include "hdlp/simgen.hpp"

namespace {

hdlp::PanelTensor panel(std::size_t n, std::size_t T, std::size_t p) {
  hdlp::SimulationScenario s;
  s.n = n;
  s.T = T;
  s.p = p;
  s.seed = 17;
  return hdlp::simulate_panel(s).panel;
}

void BM_MeanScanUstat(benchmark::State& state) {
  const auto x = panel(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdlp::mean_scan(x, x.full_interval(), hdlp::VarianceMode::ustat));
  }
}
BENCHMARK(BM_MeanScanUstat)
    ->Args({60, 100, 100})
    ->Args({30, 150, 200})
    ->Args({90, 100, 200})
    ->Unit(benchmark::kMillisecond);

void BM_PairSplitProfiles(benchmark::State& state) {
  const auto x = panel(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdlp::pair_split_profiles(x, x.full_interval()));
  }
}
BENCHMARK(BM_PairSplitProfiles)->Args({60, 100, 100})->Args({30, 50, 50})->Unit(benchmark::kMillisecond);

void BM_PooledGram(benchmark::State& state) {
  const auto x = panel(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(hdlp::pooled_gram(x, x.full_interval()));
}
BENCHMARK(BM_PooledGram)->Args({60, 100, 100})->Unit(benchmark::kMillisecond);

void BM_SimulatePanel(benchmark::State& state) {
  hdlp::SimulationScenario s;
  s.n = state.range(0);
  s.T = state.range(1);
  s.p = state.range(2);
  s.delta = {0.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdlp::simulate_panel(s));
    ++s.seed;
  }
}
BENCHMARK(BM_SimulatePanel)->Args({60, 100, 100})->Args({30, 150, 200})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
