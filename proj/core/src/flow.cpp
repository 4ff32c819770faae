#include "dualview/flow.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dualview/filter.hpp"
#include "dualview/warp.hpp"

namespace dualview {

void FlowParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "flow params: " + what); };
  if (pyramid_levels < 1) fail("pyramid_levels must be >= 1");
  if (!(scale_factor > 0.0 && scale_factor < 1.0)) fail("scale_factor must lie in (0, 1)");
  if (iterations_per_level < 0) fail("iterations_per_level must be >= 0");
  if (window_radius < 1) fail("window_radius must be >= 1");
  if (!(robust_threshold > 0.0)) fail("robust_threshold must be > 0");
  if (!(smoothness_weight >= 0.0)) fail("smoothness_weight must be >= 0");
  if (!(damping >= 0.0)) fail("damping must be >= 0");
}

namespace {

// Pixel-centre convention: fine coordinate x maps to (x + 0.5) * s - 0.5.
double to_coarse(double x, double s) { return (x + 0.5) * s - 0.5; }
double to_fine(double x, double s) { return (x + 0.5) / s - 0.5; }

int level_extent(int extent, double scale) { return static_cast<int>(std::lround(extent * scale)); }

Image resample(const Image& img, int width, int height, double scale) {
  Image out(width, height, img.channels());
  std::vector<float> px(static_cast<std::size_t>(img.channels()));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      bilinear_sample(img, to_fine(x, scale), to_fine(y, scale), BorderPolicy::kClamp, px);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = px[c];
    }
  }
  return out;
}

std::vector<double> to_double(const Image& img) { return {img.plane(0).begin(), img.plane(0).end()}; }

void central_gradients(std::span<const double> img, int w, int h, std::vector<double>& gx, std::vector<double>& gy) {
  gx.assign(img.size(), 0.0);
  gy.assign(img.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
      const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
      if (xr > xl) gx[i] = (img[static_cast<std::size_t>(y) * w + xr] - img[static_cast<std::size_t>(y) * w + xl]) / (xr - xl);
      if (yd > yu) gy[i] = (img[static_cast<std::size_t>(yd) * w + x] - img[static_cast<std::size_t>(yu) * w + x]) / (yd - yu);
    }
  }
}

}  // namespace

std::vector<Image> build_pyramid(const Image& img, int levels, double scale) {
  if (levels < 1) throw Error(ErrorCode::kInvalidArgument, "pyramid needs at least one level");
  if (!(scale > 0.0 && scale < 1.0)) throw Error(ErrorCode::kInvalidArgument, "pyramid scale must lie in (0, 1)");
  int w = img.width();
  int h = img.height();
  for (int l = 1; l < levels; ++l) {
    w = level_extent(w, scale);
    h = level_extent(h, scale);
  }
  if (w < 8 || h < 8) {
    throw Error(ErrorCode::kTooManyLevels, std::to_string(levels) + " levels leave a " + std::to_string(w) + "x" +
                                              std::to_string(h) + " coarsest level");
  }
  std::vector<Image> pyr;
  pyr.reserve(static_cast<std::size_t>(levels));
  pyr.push_back(img);
  for (int l = 1; l < levels; ++l) {
    const Image& prev = pyr.back();
    const Image blurred = gaussian_blur(prev, 1.0);
    pyr.push_back(resample(blurred, level_extent(prev.width(), scale), level_extent(prev.height(), scale), scale));
  }
  return pyr;
}

double robust_weight(double residual, double threshold) noexcept {
  if (std::isinf(threshold)) return 1.0;
  const double t = residual / threshold;
  return 1.0 / (1.0 + t * t);
}

FlowUpdate lk_update(std::span<const double> gx, std::span<const double> gy, std::span<const double> residual,
                     std::span<const double> valid, int width, int height, int radius, double robust_threshold,
                     double damping, FlowWindow window) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> axx(n), axy(n), ayy(n), bx(n), by(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = valid[i] * robust_weight(residual[i], robust_threshold);
    axx[i] = w * gx[i] * gx[i];
    axy[i] = w * gx[i] * gy[i];
    ayy[i] = w * gy[i] * gy[i];
    bx[i] = -w * gx[i] * residual[i];
    by[i] = -w * gy[i] * residual[i];
  }
  const int inner = radius / 2;
  const int outer = radius - inner;
  auto windowed = [&](const std::vector<double>& v) {
    if (window == FlowWindow::kBox) return box_sum(v, width, height, radius);
    return box_sum(box_sum(v, width, height, outer), width, height, inner);
  };
  axx = windowed(axx);
  axy = windowed(axy);
  ayy = windowed(ayy);
  bx = windowed(bx);
  by = windowed(by);

  constexpr double kMinEigen = 1e-6;
  FlowUpdate up{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<unsigned char>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double tr = axx[i] + ayy[i];
    const double det = axx[i] * ayy[i] - axy[i] * axy[i];
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    const double min_eig = 0.5 * tr - disc;
    if (!(min_eig > kMinEigen)) continue;
    const double dxx = axx[i] + damping;
    const double dyy = ayy[i] + damping;
    const double ddet = dxx * dyy - axy[i] * axy[i];
    up.du[i] = (dyy * bx[i] - axy[i] * by[i]) / ddet;
    up.dv[i] = (dxx * by[i] - axy[i] * bx[i]) / ddet;
    up.solved[i] = 1;
  }
  return up;
}

FlowField refine_flow(const Image& img1, const Image& img2, const FlowField& init_flow, const FlowParams& params) {
  params.validate();
  require_same_extent(img1, img2, "refine_flow");
  if (!init_flow.same_extent(img1.width(), img1.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "refine_flow: init flow extent differs from image");
  }
  const auto pyr1 = build_pyramid(to_gray(img1), params.pyramid_levels, params.scale_factor);
  const auto pyr2 = build_pyramid(to_gray(img2), params.pyramid_levels, params.scale_factor);
  constexpr double kMaxStep = 1.0;  // px per iteration at the working level

  std::vector<double> du, dv;  // increment over the initial flow, current level
  int prev_w = 0;
  int prev_h = 0;
  for (int level = params.pyramid_levels - 1; level >= 0; --level) {
    const Image& l1 = pyr1[level];
    const Image& l2 = pyr2[level];
    const int w = l1.width();
    const int h = l1.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const double to_level = std::pow(params.scale_factor, level);

    // Initial flow expressed on this level's grid and in this level's pixels.
    std::vector<double> iu(n), iv(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Point2 f = sample_flow(init_flow, to_fine(x, to_level), to_fine(y, to_level));
        iu[static_cast<std::size_t>(y) * w + x] = f.x * to_level;
        iv[static_cast<std::size_t>(y) * w + x] = f.y * to_level;
      }
    }

    if (du.empty()) {
      du.assign(n, 0.0);
      dv.assign(n, 0.0);
    } else {
      // Upsample the coarser increment.
      FlowField coarse(prev_w, prev_h);
      for (std::size_t i = 0; i < du.size(); ++i) {
        coarse.u_data()[i] = static_cast<float>(du[i]);
        coarse.v_data()[i] = static_cast<float>(dv[i]);
      }
      std::vector<double> nu(n), nv(n);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const Point2 f =
              sample_flow(coarse, to_coarse(x, params.scale_factor), to_coarse(y, params.scale_factor));
          nu[static_cast<std::size_t>(y) * w + x] = f.x / params.scale_factor;
          nv[static_cast<std::size_t>(y) * w + x] = f.y / params.scale_factor;
        }
      }
      du = std::move(nu);
      dv = std::move(nv);
    }

    const std::vector<double> i1 = to_double(l1);
    std::vector<double> g1x, g1y;
    central_gradients(i1, w, h, g1x, g1y);

    std::vector<double> warped(n), valid(n), residual(n), g2x, g2y, gx(n), gy(n);
    for (int it = 0; it < params.iterations_per_level; ++it) {
      float px = 0.0f;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const bool ok = bilinear_sample(l2, x + iu[i] + du[i], y + iv[i] + dv[i], BorderPolicy::kMarkInvalid,
                                          std::span<float>(&px, 1));
          warped[i] = px;
          valid[i] = ok ? 1.0 : 0.0;
          residual[i] = warped[i] - i1[i];
        }
      }
      central_gradients(warped, w, h, g2x, g2y);
      for (std::size_t i = 0; i < n; ++i) {
        gx[i] = 0.5 * (g1x[i] + g2x[i]);
        gy[i] = 0.5 * (g1y[i] + g2y[i]);
      }
      FlowUpdate up = lk_update(gx, gy, residual, valid, w, h, params.window_radius, params.robust_threshold, params.damping,
                                params.window);
      if (params.smoothness_weight > 0.0) {
        const auto su = gaussian_blur_plane(up.du, w, h, 1.0);
        const auto sv = gaussian_blur_plane(up.dv, w, h, 1.0);
        const double k = params.smoothness_weight;
        for (std::size_t i = 0; i < n; ++i) {
          up.du[i] = (up.du[i] + k * su[i]) / (1.0 + k);
          up.dv[i] = (up.dv[i] + k * sv[i]) / (1.0 + k);
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::hypot(up.du[i], up.dv[i]);
        const double s = mag > kMaxStep ? kMaxStep / mag : 1.0;
        du[i] += s * up.du[i];
        dv[i] += s * up.dv[i];
      }
    }
    prev_w = w;
    prev_h = h;
  }

  FlowField out = init_flow;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.u_data()[i] = static_cast<float>(out.u_data()[i] + du[i]);
    out.v_data()[i] = static_cast<float>(out.v_data()[i] + dv[i]);
  }
  return out;
}

FlowEstimate estimate_flow(const Image& img1, const Image& img2, const FlowParams& params, Rng& rng) {
  params.validate();
  require_same_extent(img1, img2, "estimate_flow");
  FlowEstimate est;
  est.alignment = estimate_dominant_homography(img1, img2, params.align, rng);
  est.reliable = est.alignment.diagnostics.reliable;
  const FlowField init = homography_to_flow(est.alignment.homography, img1.width(), img1.height());
  est.flow = refine_flow(img1, img2, init, params);
  return est;
}

// ---------------------------------------------------------------------------
// Records

void to_json(nlohmann::json& j, const AlignParams& p) {
  j = nlohmann::json{{"max_corners", p.max_corners},
                     {"min_corner_distance", p.min_corner_distance},
                     {"patch_radius", p.patch_radius},
                     {"search_radius", p.search_radius},
                     {"inlier_threshold", p.inlier_threshold},
                     {"confidence", p.confidence},
                     {"max_iterations", p.max_iterations},
                     {"min_matches", p.min_matches},
                     {"min_inlier_ratio", p.min_inlier_ratio}};
}

void from_json(const nlohmann::json& j, AlignParams& p) {
  p.max_corners = j.value("max_corners", p.max_corners);
  p.min_corner_distance = j.value("min_corner_distance", p.min_corner_distance);
  p.patch_radius = j.value("patch_radius", p.patch_radius);
  p.search_radius = j.value("search_radius", p.search_radius);
  p.inlier_threshold = j.value("inlier_threshold", p.inlier_threshold);
  p.confidence = j.value("confidence", p.confidence);
  p.max_iterations = j.value("max_iterations", p.max_iterations);
  p.min_matches = j.value("min_matches", p.min_matches);
  p.min_inlier_ratio = j.value("min_inlier_ratio", p.min_inlier_ratio);
}

void to_json(nlohmann::json& j, const FlowParams& p) {
  j = nlohmann::json{{"pyramid_levels", p.pyramid_levels},
                     {"scale_factor", p.scale_factor},
                     {"iterations_per_level", p.iterations_per_level},
                     {"window_radius", p.window_radius},
                     {"robust_threshold", p.robust_threshold},
                     {"smoothness_weight", p.smoothness_weight},
                     {"damping", p.damping},
                     {"window", p.window == FlowWindow::kTent ? "tent" : "box"},
                     {"align", p.align}};
}

void from_json(const nlohmann::json& j, FlowParams& p) {
  p.pyramid_levels = j.value("pyramid_levels", p.pyramid_levels);
  p.scale_factor = j.value("scale_factor", p.scale_factor);
  p.iterations_per_level = j.value("iterations_per_level", p.iterations_per_level);
  p.window_radius = j.value("window_radius", p.window_radius);
  p.robust_threshold = j.value("robust_threshold", p.robust_threshold);
  p.smoothness_weight = j.value("smoothness_weight", p.smoothness_weight);
  p.damping = j.value("damping", p.damping);
  if (j.contains("window")) {
    const auto name = j.at("window").get<std::string>();
    if (name != "box" && name != "tent") throw Error(ErrorCode::kInvalidArgument, "flow window must be box or tent");
    p.window = name == "tent" ? FlowWindow::kTent : FlowWindow::kBox;
  }
  if (j.contains("align")) j.at("align").get_to(p.align);
}

}  // namespace dualview
