#include <benchmark/benchmark.h>

#include "dualview/homography.hpp"
#include "dualview/warp.hpp"
#include "fixtures.hpp"

namespace dualview {
namespace {

void BM_BackwardWarp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = bench::photo(n);
  const FlowField flow = homography_to_flow(Homography::translation(2.3, -1.7), n, n);
  for (auto _ : state) {
    WarpResult w = backward_warp(img, flow, BorderPolicy::kMarkInvalid);
    benchmark::DoNotOptimize(w.image.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_BackwardWarp)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_OcclusionMask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Homography h = Homography::translation(3.0, 1.0);
  const FlowField f12 = homography_to_flow(h, n, n);
  const FlowField f21 = homography_to_flow(h.inverse(), n, n);
  for (auto _ : state) {
    Mask m = occlusion_mask(f12, f21);
    benchmark::DoNotOptimize(m.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_OcclusionMask)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualview
