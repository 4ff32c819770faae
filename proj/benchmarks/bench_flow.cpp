#include <benchmark/benchmark.h>

#include "dualview/flow.hpp"
#include "dualview/homography.hpp"
#include "dualview/warp.hpp"
#include "fixtures.hpp"

namespace dualview {
namespace {

void BM_RefineFlow(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  FlowParams params;
  params.window = state.range(1) ? FlowWindow::kTent : FlowWindow::kBox;
  const Image src = bench::photo(n);
  const Image moved =
      backward_warp(src, homography_to_flow(Homography::translation(-1.5, 0.5), n, n), BorderPolicy::kClamp).image;
  const FlowField init = homography_to_flow(Homography::translation(1.4, -0.4), n, n);
  for (auto _ : state) {
    FlowField f = refine_flow(src, moved, init, params);
    benchmark::DoNotOptimize(f.u_data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_RefineFlow)->ArgsProduct({{256, 512}, {0, 1}})->ArgNames({"n", "tent"})->Unit(benchmark::kMillisecond);

void BM_BuildPyramid(benchmark::State& state) {
  const Image gray = to_gray(bench::photo(512));
  for (auto _ : state) {
    auto pyr = build_pyramid(gray, 3, 0.5);
    benchmark::DoNotOptimize(pyr.data());
  }
}
BENCHMARK(BM_BuildPyramid)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualview
