#include <benchmark/benchmark.h>

#include "dualview/dereflect.hpp"
#include "fixtures.hpp"

namespace dualview {
namespace {

// range(1): 1 runs the DCT-preconditioned solver, 0 plain CG.
void BM_PoissonReconstruct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = to_gray(bench::photo(n));
  Image gx, gy;
  forward_gradients(img, gx, gy);
  const Image flat(n, n, 1, 0.5f);  // starts CG away from the solution
  PoissonOptions options;
  options.precondition = state.range(1) != 0;
  int iterations = 0;
  for (auto _ : state) {
    PoissonResult r = poisson_reconstruct(gx, gy, flat, 1e-4, options);
    iterations = r.iterations;
    benchmark::DoNotOptimize(r.image.data().data());
  }
  state.counters["cg_iterations"] = iterations;
}
BENCHMARK(BM_PoissonReconstruct)
    ->ArgsProduct({{128, 256, 512}, {0, 1}})
    ->ArgNames({"n", "dct"})
    ->Unit(benchmark::kMillisecond);

void BM_SelectMinGradients(benchmark::State& state) {
  const Image a = bench::photo(512);
  const Image b = procedural_source(8, 512, 512);
  Image gx, gy;
  for (auto _ : state) {
    select_min_gradients(a, b, Mask{}, 0.5, gx, gy);
    benchmark::DoNotOptimize(gx.data().data());
  }
}
BENCHMARK(BM_SelectMinGradients)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualview
