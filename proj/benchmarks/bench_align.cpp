#include <benchmark/benchmark.h>

#include "dualview/align.hpp"
#include "dualview/homography.hpp"
#include "dualview/warp.hpp"
#include "fixtures.hpp"

namespace dualview {
namespace {

struct ShiftedPair {
  Image g1, g2;
  std::vector<Corner> corners;
};

ShiftedPair shifted_pair(int n) {
  const Image src = bench::photo(n);
  ShiftedPair p;
  p.g1 = to_gray(src);
  p.g2 = to_gray(backward_warp(src, homography_to_flow(Homography::translation(-4.0, 2.0), n, n),
                               BorderPolicy::kClamp).image);
  p.corners = detect_corners(p.g1, 400, 6.0);
  return p;
}

void BM_DetectCorners(benchmark::State& state) {
  const Image gray = to_gray(bench::photo(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    auto corners = detect_corners(gray, 400, 6.0);
    benchmark::DoNotOptimize(corners.data());
  }
}
BENCHMARK(BM_DetectCorners)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_MatchPatches(benchmark::State& state) {
  const ShiftedPair p = shifted_pair(512);
  const int search = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto matches = match_patches(p.g1, p.g2, p.corners, 5, search);
    benchmark::DoNotOptimize(matches.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.corners.size()));
}
BENCHMARK(BM_MatchPatches)->Arg(8)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_DominantHomography(benchmark::State& state) {
  const Image src = bench::photo(512);
  const Image moved =
      backward_warp(src, homography_to_flow(Homography::translation(-4.0, 2.0), 512, 512), BorderPolicy::kClamp).image;
  for (auto _ : state) {
    Rng rng(1);
    AlignResult r = estimate_dominant_homography(src, moved, AlignParams{}, rng);
    benchmark::DoNotOptimize(r.homography);
  }
}
BENCHMARK(BM_DominantHomography)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualview
