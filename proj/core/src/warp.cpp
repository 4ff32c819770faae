#include "dualview/warp.hpp"

#include <algorithm>
#include <cmath>

namespace dualview {

namespace {

struct Taps {
  int x0, x1, y0, y1;
  double fx, fy;
};

// Clamps the lookup point into the raster before splitting it into taps, so
// out-of-range coordinates replicate the border.
Taps taps_for(double x, double y, int width, int height) noexcept {
  const double cx = std::clamp(x, 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(height - 1));
  Taps t;
  t.x0 = static_cast<int>(std::floor(cx));
  t.y0 = static_cast<int>(std::floor(cy));
  t.fx = cx - t.x0;
  t.fy = cy - t.y0;
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  return t;
}

bool inside(double x, double y, int width, int height) noexcept {
  return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
}

}  // namespace

bool bilinear_sample(const Image& img, double x, double y, BorderPolicy policy, std::span<float> out) noexcept {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    std::ranges::fill(out, 0.0f);
    return false;
  }
  const Taps t = taps_for(x, y, img.width(), img.height());
  const double w00 = (1.0 - t.fx) * (1.0 - t.fy);
  const double w10 = t.fx * (1.0 - t.fy);
  const double w01 = (1.0 - t.fx) * t.fy;
  const double w11 = t.fx * t.fy;
  for (int c = 0; c < img.channels(); ++c) {
    const double v = w00 * img.at(t.x0, t.y0, c) + w10 * img.at(t.x1, t.y0, c) + w01 * img.at(t.x0, t.y1, c) +
                     w11 * img.at(t.x1, t.y1, c);
    out[c] = static_cast<float>(v);
  }
  return policy == BorderPolicy::kClamp || inside(x, y, img.width(), img.height());
}

Sample bilinear_sample(const Image& img, double x, double y, BorderPolicy policy) {
  Sample s;
  s.value.resize(static_cast<std::size_t>(img.channels()));
  s.valid = bilinear_sample(img, x, y, policy, s.value);
  return s;
}

Point2 sample_flow(const FlowField& flow, double x, double y) noexcept {
  const Taps t = taps_for(x, y, flow.width(), flow.height());
  auto lerp2 = [&](auto get) {
    return (1.0 - t.fy) * ((1.0 - t.fx) * get(t.x0, t.y0) + t.fx * get(t.x1, t.y0)) +
           t.fy * ((1.0 - t.fx) * get(t.x0, t.y1) + t.fx * get(t.x1, t.y1));
  };
  return {lerp2([&](int xx, int yy) { return static_cast<double>(flow.u(xx, yy)); }),
          lerp2([&](int xx, int yy) { return static_cast<double>(flow.v(xx, yy)); })};
}

WarpResult backward_warp(const Image& img2, const FlowField& flow12, BorderPolicy policy) {
  if (!flow12.same_extent(img2.width(), img2.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "backward_warp: flow and image extents differ");
  }
  WarpResult r{Image(img2.width(), img2.height(), img2.channels()), Mask(img2.width(), img2.height(), 1, 1.0f)};
  std::vector<float> px(static_cast<std::size_t>(img2.channels()));
  for (int y = 0; y < img2.height(); ++y) {
    for (int x = 0; x < img2.width(); ++x) {
      const bool ok = bilinear_sample(img2, x + static_cast<double>(flow12.u(x, y)),
                                      y + static_cast<double>(flow12.v(x, y)), policy, px);
      for (int c = 0; c < img2.channels(); ++c) r.image.at(x, y, c) = px[c];
      r.valid.at(x, y) = ok ? 1.0f : 0.0f;
    }
  }
  return r;
}

WarpResult warp_homography(const Image& src, const Homography& src_to_view, int width, int height,
                           BorderPolicy policy) {
  const Homography view_to_src = src_to_view.inverse();
  WarpResult r{Image(width, height, src.channels()), Mask(width, height, 1, 1.0f)};
  std::vector<float> px(static_cast<std::size_t>(src.channels()));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point2 q = view_to_src.apply({static_cast<double>(x), static_cast<double>(y)});
      const bool ok = bilinear_sample(src, q.x, q.y, policy, px);
      for (int c = 0; c < src.channels(); ++c) r.image.at(x, y, c) = px[c];
      r.valid.at(x, y) = ok ? 1.0f : 0.0f;
    }
  }
  return r;
}

FlowField homography_to_flow(const Homography& h, int width, int height) {
  FlowField flow(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point2 q = h.apply({static_cast<double>(x), static_cast<double>(y)});
      flow.u(x, y) = static_cast<float>(q.x - x);
      flow.v(x, y) = static_cast<float>(q.y - y);
    }
  }
  return flow;
}

Mask occlusion_mask(const FlowField& flow12, const FlowField& flow21, OcclusionThresholds thresholds) {
  if (!flow12.same_extent(flow21.width(), flow21.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "occlusion_mask: flow extents differ");
  }
  const int w = flow12.width();
  const int h = flow12.height();
  Mask occluded(w, h, 1, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = flow12.u(x, y);
      const double v = flow12.v(x, y);
      const double qx = x + u;
      const double qy = y + v;
      if (!std::isfinite(qx) || !std::isfinite(qy) || !inside(qx, qy, w, h)) {
        occluded.at(x, y) = 1.0f;
        continue;
      }
      const Point2 back = sample_flow(flow21, qx, qy);
      const double mismatch = std::hypot(u + back.x, v + back.y);
      const double limit =
          thresholds.eps_abs + thresholds.eps_rel * (std::hypot(u, v) + std::hypot(back.x, back.y));
      occluded.at(x, y) = mismatch > limit ? 1.0f : 0.0f;
    }
  }
  return occluded;
}

}  // namespace dualview
