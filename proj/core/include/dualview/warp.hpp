#pragma once

#include <span>
#include <vector>

#include "dualview/homography.hpp"
#include "dualview/image.hpp"

namespace dualview {

/// What happens when a bilinear tap falls outside the raster. Under
/// kMarkInvalid the returned value is still the clamped sample (so it stays
/// finite) but the valid flag is cleared.
enum class BorderPolicy { kClamp, kMarkInvalid };

struct Sample {
  std::vector<float> value;
  bool valid = true;
};

/// Bilinear interpolation at subpixel (x, y); pixel centres sit on integers.
/// Writes one value per channel into `out`. Returns the valid flag: false iff
/// the point lies outside [0, w-1] x [0, h-1] and policy is kMarkInvalid.
bool bilinear_sample(const Image& img, double x, double y, BorderPolicy policy, std::span<float> out) noexcept;
Sample bilinear_sample(const Image& img, double x, double y, BorderPolicy policy);

/// Bilinear lookup of a flow field, clamped at the borders.
Point2 sample_flow(const FlowField& flow, double x, double y) noexcept;

struct WarpResult {
  Image image;
  Mask valid;
};

/// I_{2->1}(p) = I_2(p + F_{1->2}(p)).
WarpResult backward_warp(const Image& img2, const FlowField& flow12, BorderPolicy policy);

/// Renders a width x height view of `src` under a source -> view homography:
/// out(p) = src(H^-1(p)). Valid marks view pixels whose source point lies
/// inside the source raster.
WarpResult warp_homography(const Image& src, const Homography& src_to_view, int width, int height,
                           BorderPolicy policy);

/// flow(p) = H(p) - p for every pixel of a width x height raster.
FlowField homography_to_flow(const Homography& h, int width, int height);

struct OcclusionThresholds {
  double eps_abs = 0.5;   ///< px
  double eps_rel = 0.01;  ///< fraction of the summed flow magnitudes
};

/// Forward-backward consistency. Returns 1 where view-1 pixel p has no
/// reliable counterpart: p + F12(p) leaves the raster, or
/// |F12(p) + F21(p + F12(p))| > eps_abs + eps_rel (|F12(p)| + |F21(.)|).
Mask occlusion_mask(const FlowField& flow12, const FlowField& flow21, OcclusionThresholds thresholds = {});

}  // namespace dualview
