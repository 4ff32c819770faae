#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

#include "dualview/error.hpp"
#include "dualview/flow.hpp"
#include "dualview/metrics.hpp"
#include "dualview/synthgen.hpp"
#include "dualview/warp.hpp"
#include "test_support.hpp"

namespace dualview {
namespace {

Mask interior(int w, int h, int border) {
  Mask m(w, h, 1, 0.0f);
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x) m.at(x, y) = 1.0f;
  return m;
}

double mean_norm(const FlowField& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::hypot(f.u_data()[i], f.v_data()[i]);
  return acc / static_cast<double>(f.size());
}

TEST(BuildPyramid, SingleLevelIsInput) {
  const Image img = test::random_image(20, 20, 1, 1);
  const auto pyr = build_pyramid(img, 1, 0.5);
  ASSERT_EQ(pyr.size(), 1u);
  EXPECT_EQ(pyr[0], img);
}

TEST(BuildPyramid, GeometricSizes) {
  const auto pyr = build_pyramid(test::random_image(64, 64, 1, 2), 3, 0.5);
  ASSERT_EQ(pyr.size(), 3u);
  EXPECT_EQ(pyr[0].width(), 64);
  EXPECT_EQ(pyr[1].width(), 32);
  EXPECT_EQ(pyr[2].width(), 16);
  EXPECT_EQ(pyr[2].height(), 16);
}

TEST(BuildPyramid, ConstantStaysConstant) {
  for (const Image& level : build_pyramid(Image(64, 48, 1, 0.3f), 3, 0.5)) {
    for (float v : level.data()) EXPECT_NEAR(v, 0.3f, 1e-6);
  }
}

TEST(BuildPyramid, TooManyLevels) {
  try {
    build_pyramid(Image(32, 32, 1), 4, 0.5);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManyLevels);
  }
}

TEST(RobustWeight, MonotoneAndBounded) {
  double prev = robust_weight(0.0, 0.1);
  EXPECT_EQ(prev, 1.0);
  for (double r = 0.001; r < 5.0; r *= 1.3) {
    const double w = robust_weight(r, 0.1);
    EXPECT_GT(w, 0.0);
    EXPECT_LE(w, 1.0);
    EXPECT_LE(w, prev);
    EXPECT_EQ(robust_weight(-r, 0.1), w);
    prev = w;
  }
  EXPECT_EQ(robust_weight(3.0, std::numeric_limits<double>::infinity()), 1.0);
}

TEST(LkUpdate, InfiniteThresholdIsPlainLeastSquares) {
  const int w = 7, h = 7, r = 2;
  Rng rng(4);
  std::vector<double> gx(w * h), gy(w * h), res(w * h), valid(w * h, 1.0);
  for (int i = 0; i < w * h; ++i) {
    gx[i] = rng.uniform(-1, 1);
    gy[i] = rng.uniform(-1, 1);
    res[i] = rng.uniform(-0.5, 0.5);
  }
  const FlowUpdate up = lk_update(gx, gy, res, valid, w, h, r, std::numeric_limits<double>::infinity());
  // Hand-solved 2x2 system at the centre pixel.
  double a = 0, b = 0, c = 0, ex = 0, ey = 0;
  for (int y = 3 - r; y <= 3 + r; ++y) {
    for (int x = 3 - r; x <= 3 + r; ++x) {
      const int i = y * w + x;
      a += gx[i] * gx[i];
      b += gx[i] * gy[i];
      c += gy[i] * gy[i];
      ex -= gx[i] * res[i];
      ey -= gy[i] * res[i];
    }
  }
  const double det = a * c - b * b;
  const int centre = 3 * w + 3;
  ASSERT_TRUE(up.solved[centre]);
  EXPECT_NEAR(up.du[centre], (c * ex - b * ey) / det, 1e-10);
  EXPECT_NEAR(up.dv[centre], (a * ey - b * ex) / det, 1e-10);
}

// Tent weight of offset d: the number of ways d = i + j with |i| <= outer
// and |j| <= inner.
double tent_weight(int d, int outer, int inner) {
  int count = 0;
  for (int i = -outer; i <= outer; ++i) count += std::abs(d - i) <= inner;
  return count;
}

TEST(LkUpdate, TentWindowMatchesHandSolvedWeightedSystem) {
  const int w = 15, h = 15, r = 3, outer = 2, inner = 1;
  Rng rng(9);
  std::vector<double> gx(w * h), gy(w * h), res(w * h), valid(w * h, 1.0);
  for (int i = 0; i < w * h; ++i) {
    gx[i] = rng.uniform(-1, 1);
    gy[i] = rng.uniform(-1, 1);
    res[i] = rng.uniform(-0.5, 0.5);
  }
  const FlowUpdate up =
      lk_update(gx, gy, res, valid, w, h, r, std::numeric_limits<double>::infinity(), 0.0, FlowWindow::kTent);
  const int cx = 7, cy = 7;
  double a = 0, b = 0, c = 0, ex = 0, ey = 0;
  for (int y = cy - r; y <= cy + r; ++y) {
    for (int x = cx - r; x <= cx + r; ++x) {
      const int i = y * w + x;
      const double k = tent_weight(x - cx, outer, inner) * tent_weight(y - cy, outer, inner);
      a += k * gx[i] * gx[i];
      b += k * gx[i] * gy[i];
      c += k * gy[i] * gy[i];
      ex -= k * gx[i] * res[i];
      ey -= k * gy[i] * res[i];
    }
  }
  const double det = a * c - b * b;
  const int centre = cy * w + cx;
  ASSERT_TRUE(up.solved[centre]);
  EXPECT_NEAR(up.du[centre], (c * ex - b * ey) / det, 1e-10);
  EXPECT_NEAR(up.dv[centre], (a * ey - b * ex) / det, 1e-10);
}

TEST(LkUpdate, IllConditionedWindowKeepsInit) {
  const int w = 9, h = 9;
  std::vector<double> gx(w * h, 1.0), gy(w * h, 0.0), res(w * h, 0.2), valid(w * h, 1.0);
  const FlowUpdate up = lk_update(gx, gy, res, valid, w, h, 2, 0.1);
  for (int i = 0; i < w * h; ++i) {
    EXPECT_EQ(up.solved[i], 0);
    EXPECT_EQ(up.du[i], 0.0);
    EXPECT_EQ(up.dv[i], 0.0);
  }
}

TEST(RefineFlow, IdenticalImagesStayAtZero) {
  const Image img = test::photo(96, 96, 1);
  const FlowField f = refine_flow(img, img, FlowField(96, 96), FlowParams{});
  for (float u : f.u_data()) EXPECT_EQ(u, 0.0f);
  for (float v : f.v_data()) EXPECT_EQ(v, 0.0f);
}

// Every window of the sine texture carries gradient energy in both
// directions, so the translation is observable everywhere.
TEST(RefineFlow, PureTranslationFromZero) {
  const Image img1 = test::sine_texture(160, 160);
  const Image img2 = test::shift_image(img1, -2, -1);  // img2(p + (2,1)) = img1(p)
  FlowParams params;
  params.pyramid_levels = 3;
  const FlowField f = refine_flow(img1, img2, FlowField(160, 160), params);
  EXPECT_LT(epe(f, FlowField(160, 160, 2.0f, 1.0f), interior(160, 160, 8)).mean, 0.2);
}

TEST(RefineFlow, KeepsExactInit) {
  const Image img1 = test::photo(128, 128, 3);
  const Image img2 = test::shift_image(img1, -3, 2);
  const FlowField truth(128, 128, 3.0f, -2.0f);
  const FlowField f = refine_flow(img1, img2, truth, FlowParams{});
  EXPECT_LT(epe(f, truth, interior(128, 128, 8)).mean, 0.05);
}

TEST(RefineFlow, InitExtentMismatch) {
  const Image img = test::photo(64, 64, 1);
  EXPECT_THROW(refine_flow(img, img, FlowField(32, 64), FlowParams{}), Error);
}

TEST(EstimateFlow, IdentityPairNearZero) {
  const Image img = test::photo(192, 192, 4);
  Rng rng(1);
  const FlowEstimate est = estimate_flow(img, img, FlowParams{}, rng);
  EXPECT_LT(mean_norm(est.flow), 0.05);
}

TEST(EstimateFlow, ReflectionFreeHomographyPair) {
  GenConfig cfg;
  cfg.out_size = 256;
  cfg.alpha = {1.0, 1.0};
  cfg.spot_gain = 0.0;
  for (std::uint64_t seed : {5u, 6u}) {
    Rng rng(seed);
    const SamplePair p = compose_views(test::photo(320, 320, seed), test::photo(320, 320, seed + 7), rng, cfg);
    Rng frng(seed);
    const FlowEstimate est = estimate_flow(p.i1, p.i2, FlowParams{}, frng);
    EXPECT_TRUE(est.reliable);
    EXPECT_LT(epe(est.flow, p.f12).mean, 0.3) << "seed " << seed;
  }
}

TEST(EstimateFlow, EquivariantUnderIntegerTranslation) {
  const Image a1 = test::photo(200, 200, 8);
  const Image a2 = test::shift_image(a1, -3, -1);
  const Image b1 = test::shift_image(a1, 5, 4);
  const Image b2 = test::shift_image(a2, 5, 4);
  Rng ra(2), rb(2);
  const FlowField fa = estimate_flow(a1, a2, FlowParams{}, ra).flow;
  const FlowField fb = estimate_flow(b1, b2, FlowParams{}, rb).flow;
  // b(p) = a(p + (5,4)); compare on the region both rasters see away from borders.
  double worst_mean = 0.0, acc = 0.0;
  std::size_t n = 0;
  for (int y = 16; y < 200 - 24; ++y) {
    for (int x = 16; x < 200 - 24; ++x) {
      acc += std::hypot(fb.u(x, y) - fa.u(x + 5, y + 4), fb.v(x, y) - fa.v(x + 5, y + 4));
      ++n;
    }
  }
  worst_mean = acc / static_cast<double>(n);
  EXPECT_LT(worst_mean, 0.1);
}

TEST(FlowParams, ValidateRejectsBadValues) {
  FlowParams p;
  p.scale_factor = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = FlowParams{};
  p.window_radius = 0;
  EXPECT_THROW(p.validate(), Error);
  p = FlowParams{};
  p.pyramid_levels = 0;
  EXPECT_THROW(p.validate(), Error);
  p = FlowParams{};
  p.damping = -1.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(FlowParams, WindowRoundTripsThroughJson) {
  FlowParams p;
  p.window = FlowWindow::kTent;
  const FlowParams back = nlohmann::json(p).get<FlowParams>();
  EXPECT_EQ(back.window, FlowWindow::kTent);
  EXPECT_EQ(nlohmann::json(FlowParams{}).at("window"), "box");
  EXPECT_THROW(nlohmann::json({{"window", "gauss"}}).get<FlowParams>(), Error);
}

}  // namespace
}  // namespace dualview
