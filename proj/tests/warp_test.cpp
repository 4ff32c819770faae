#include <gtest/gtest.h>

#include <cmath>

#include "dualview/error.hpp"
#include "dualview/homography.hpp"
#include "dualview/warp.hpp"
#include "test_support.hpp"

namespace dualview {
namespace {

Homography projective(double tx, double ty, double p1, double p2) {
  return Homography::from_coefficients({1.01, 0.02, tx, -0.015, 0.99, ty, p1, p2, 1.0});
}

TEST(BilinearSample, IntegerCoordinatesAreExact) {
  const Image img = test::random_image(6, 5, 3, 1);
  const Sample s = bilinear_sample(img, 3.0, 2.0, BorderPolicy::kMarkInvalid);
  ASSERT_TRUE(s.valid);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(s.value[c], img.at(3, 2, c));
}

TEST(BilinearSample, MidpointOfFour) {
  Image img(2, 2, 1);
  img.at(0, 1) = 1.0f;
  img.at(1, 1) = 1.0f;
  EXPECT_FLOAT_EQ(bilinear_sample(img, 0.5, 0.5, BorderPolicy::kClamp).value[0], 0.5f);
}

TEST(BilinearSample, ClampOutsideConstant) {
  const Image img(4, 4, 1, 0.37f);
  const Sample s = bilinear_sample(img, -0.5, 1.25, BorderPolicy::kClamp);
  EXPECT_TRUE(s.valid);
  EXPECT_FLOAT_EQ(s.value[0], 0.37f);
}

TEST(BilinearSample, ClampMatchesExpandedWeights) {
  // Taps at x = -1 and 0 both clamp to column 0; y weights 0.75 / 0.25.
  Image img(3, 3, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) img.at(x, y) = static_cast<float>(10 * y + x);
  const double expected = 0.5 * (0.75 * img.at(0, 1) + 0.25 * img.at(0, 2)) +
                          0.5 * (0.75 * img.at(0, 1) + 0.25 * img.at(0, 2));
  EXPECT_NEAR(bilinear_sample(img, -0.5, 1.25, BorderPolicy::kClamp).value[0], expected, 1e-5);
}

TEST(BilinearSample, MarkInvalidOutside) {
  const Image img(4, 4, 1, 0.5f);
  EXPECT_FALSE(bilinear_sample(img, -0.01, 1.0, BorderPolicy::kMarkInvalid).valid);
  EXPECT_FALSE(bilinear_sample(img, 1.0, 3.01, BorderPolicy::kMarkInvalid).valid);
  EXPECT_TRUE(bilinear_sample(img, 3.0, 3.0, BorderPolicy::kMarkInvalid).valid);
}

TEST(BilinearSample, ConvexInTaps) {
  const Image img = test::random_image(9, 9, 1, 2);
  Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const double x = rng.uniform(0, 8), y = rng.uniform(0, 8);
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, 8), y1 = std::min(y0 + 1, 8);
    const float lo = std::min({img.at(x0, y0), img.at(x1, y0), img.at(x0, y1), img.at(x1, y1)});
    const float hi = std::max({img.at(x0, y0), img.at(x1, y0), img.at(x0, y1), img.at(x1, y1)});
    const float v = bilinear_sample(img, x, y, BorderPolicy::kClamp).value[0];
    EXPECT_GE(v, lo - 1e-6f);
    EXPECT_LE(v, hi + 1e-6f);
  }
}

TEST(BackwardWarp, ZeroFlowIsIdentity) {
  const Image img = test::random_image(11, 7, 3, 9);
  const WarpResult r = backward_warp(img, FlowField(11, 7), BorderPolicy::kMarkInvalid);
  EXPECT_EQ(r.image, img);
  for (float v : r.valid.data()) EXPECT_EQ(v, 1.0f);
}

TEST(BackwardWarp, IntegerShiftOfRamp) {
  const int w = 10, h = 4;
  Image ramp(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) ramp.at(x, y) = static_cast<float>(x) / w;
  const WarpResult r = backward_warp(ramp, FlowField(w, h, 3.0f, 0.0f), BorderPolicy::kMarkInvalid);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 3 < w) {
        EXPECT_EQ(r.image.at(x, y), ramp.at(x + 3, y));
        EXPECT_EQ(r.valid.at(x, y), 1.0f);
      } else {
        EXPECT_EQ(r.valid.at(x, y), 0.0f);
      }
    }
  }
}

TEST(BackwardWarp, DimensionMismatch) {
  try {
    backward_warp(Image(4, 4, 1), FlowField(5, 4), BorderPolicy::kClamp);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(BackwardWarp, CommutesWithChannelSelection) {
  const Image img = test::random_image(12, 10, 3, 4);
  FlowField f(12, 10);
  Rng rng(6);
  for (float& u : f.u_data()) u = static_cast<float>(rng.uniform(-2, 2));
  for (float& v : f.v_data()) v = static_cast<float>(rng.uniform(-2, 2));
  const WarpResult all = backward_warp(img, f, BorderPolicy::kClamp);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(backward_warp(img.channel(c), f, BorderPolicy::kClamp).image, all.image.channel(c));
  }
}

TEST(HomographyToFlow, IdentityIsZero) {
  const FlowField f = homography_to_flow(Homography(), 8, 6);
  for (float u : f.u_data()) EXPECT_EQ(u, 0.0f);
  for (float v : f.v_data()) EXPECT_EQ(v, 0.0f);
}

TEST(HomographyToFlow, TranslationIsConstant) {
  const FlowField f = homography_to_flow(Homography::translation(2.5, 0.0), 8, 6);
  for (float u : f.u_data()) EXPECT_FLOAT_EQ(u, 2.5f);
  for (float v : f.v_data()) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(HomographyToFlow, ProjectiveMatchesHandProjection) {
  const Homography::Coefficients h{1.02, -0.03, 4.0, 0.01, 0.98, -2.0, 1e-4, -2e-4, 1.0};
  const FlowField f = homography_to_flow(Homography::from_coefficients(h), 40, 30);
  const int pts[5][2] = {{0, 0}, {39, 0}, {0, 29}, {17, 11}, {39, 29}};
  for (const auto& p : pts) {
    const double x = p[0], y = p[1];
    const double d = h[6] * x + h[7] * y + h[8];
    const double px = (h[0] * x + h[1] * y + h[2]) / d;
    const double py = (h[3] * x + h[4] * y + h[5]) / d;
    EXPECT_NEAR(f.u(p[0], p[1]), px - x, 1e-4);
    EXPECT_NEAR(f.v(p[0], p[1]), py - y, 1e-4);
  }
}

TEST(HomographyToFlow, CompositionPointwise) {
  const Homography a = projective(3.0, -1.0, 1e-5, -2e-5);
  const Homography b = projective(-2.0, 4.0, -3e-5, 1e-5);
  const FlowField fab = homography_to_flow(a * b, 64, 48);
  for (int y = 0; y < 48; y += 7) {
    for (int x = 0; x < 64; x += 9) {
      const Point2 q = a.apply(b.apply({double(x), double(y)}));
      EXPECT_NEAR(fab.u(x, y), q.x - x, 1e-4);
      EXPECT_NEAR(fab.v(x, y), q.y - y, 1e-4);
    }
  }
}

TEST(HomographyToFlow, SingularThrows) {
  try {
    Homography::from_coefficients({1, 0, 0, 0, 1, 0, 0, 0, 0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularHomography);
  }
}

TEST(OcclusionMask, ConsistentTranslationHasNoInteriorOcclusion) {
  const int w = 30, h = 20;
  const Mask m = occlusion_mask(FlowField(w, h, 2.0f, -1.0f), FlowField(w, h, -2.0f, 1.0f));
  for (int y = 1; y < h; ++y) {
    for (int x = 0; x + 2 < w; ++x) EXPECT_EQ(m.at(x, y), 0.0f) << x << "," << y;
  }
}

TEST(OcclusionMask, OffRasterIsOccluded) {
  const int w = 10, h = 10;
  const Mask m = occlusion_mask(FlowField(w, h, 3.0f, 0.0f), FlowField(w, h, -3.0f, 0.0f));
  for (int y = 0; y < h; ++y) {
    EXPECT_EQ(m.at(9, y), 1.0f);
    EXPECT_EQ(m.at(7, y), 1.0f);
    EXPECT_EQ(m.at(6, y), 0.0f);
  }
}

TEST(OcclusionMask, InconsistentFlowIsOccluded) {
  const Mask m = occlusion_mask(FlowField(10, 10, 1.0f, 0.0f), FlowField(10, 10, 1.0f, 0.0f));
  EXPECT_EQ(m.at(4, 4), 1.0f);
}

TEST(OcclusionMask, InverseHomographiesOccludeExactlyOffRaster) {
  const int w = 120, h = 90;
  const Homography hm = projective(6.0, -4.0, 2e-5, -1e-5);
  const Mask m = occlusion_mask(homography_to_flow(hm, w, h), homography_to_flow(hm.inverse(), w, h));
  std::size_t off = 0, occluded = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 q = hm.apply({double(x), double(y)});
      off += (q.x < 0 || q.y < 0 || q.x > w - 1 || q.y > h - 1) ? 1 : 0;
      occluded += m.at(x, y) > 0.5f ? 1 : 0;
    }
  }
  EXPECT_NEAR(double(occluded) / (w * h), double(off) / (w * h), 0.01);
}

}  // namespace
}  // namespace dualview
