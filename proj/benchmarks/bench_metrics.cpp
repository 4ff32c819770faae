#include <benchmark/benchmark.h>

#include "dualview/metrics.hpp"
#include "fixtures.hpp"

namespace dualview {
namespace {

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image a = bench::photo(n);
  const Image b = procedural_source(8, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Ssim)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ScoreTransmission(benchmark::State& state) {
  const Image a = bench::photo(512);
  const Image b = procedural_source(8, 512, 512);
  for (auto _ : state) {
    ImageRow row = score_transmission(a, b);
    benchmark::DoNotOptimize(row.psnr);
  }
}
BENCHMARK(BM_ScoreTransmission)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualview
