#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualview/align.hpp"
#include "dualview/image.hpp"
#include "dualview/random.hpp"

namespace dualview {

/// Window of the Lucas-Kanade normal equations. kBox weights the
/// (2r+1)^2 neighbourhood uniformly; its transfer function has negative
/// lobes, so many dense iterations amplify some error frequencies. kTent is a
/// box of radius ceil(r/2) followed by one of radius floor(r/2): same support,
/// nonnegative transfer function, so an update never overshoots.
enum class FlowWindow { kBox, kTent };

struct FlowParams {
  int pyramid_levels = 2;
  double scale_factor = 0.5;
  int iterations_per_level = 3;
  int window_radius = 4;
  double robust_threshold = 0.1;  ///< intensity units; +inf gives plain least squares
  double smoothness_weight = 1.0;
  /// Added to both diagonal entries of each windowed normal system. Damps
  /// updates in weakly textured windows; 0 gives plain Lucas-Kanade.
  double damping = 0.5;
  FlowWindow window = FlowWindow::kBox;
  AlignParams align;

  /// Throws kInvalidArgument listing the first violated constraint.
  void validate() const;
};

/// Gaussian pre-blur (sigma 1) then bilinear resampling by `scale` per
/// level. Level 0 is the input. Throws kTooManyLevels when the coarsest
/// level would be smaller than 8x8.
std::vector<Image> build_pyramid(const Image& img, int levels, double scale);

/// Influence weight 1 / (1 + (r / threshold)^2); 1 everywhere when the
/// threshold is infinite.
double robust_weight(double residual, double threshold) noexcept;

struct FlowUpdate {
  std::vector<double> du;
  std::vector<double> dv;
  std::vector<unsigned char> solved;  ///< 0 where the window was ill-conditioned
};

/// One robust Lucas-Kanade step on one-channel rasters. `gx`, `gy` are the
/// spatial gradients, `residual` is I2(p + flow) - I1(p) and `valid` gates
/// each pixel's contribution. Solves the windowed 2x2 normal equations
/// sum w [gx gx, gx gy; gx gy, gy gy] d = -sum w [gx r; gy r] per pixel; the
/// update stays 0 where the smaller eigenvalue of the system is <= 1e-6.
/// `damping` is added to the diagonal after the gate. `window` weights the
/// sums over the (2r+1)^2 neighbourhood.
FlowUpdate lk_update(std::span<const double> gx, std::span<const double> gy, std::span<const double> residual,
                     std::span<const double> valid, int width, int height, int radius, double robust_threshold,
                     double damping = 0.0, FlowWindow window = FlowWindow::kBox);

/// Coarse-to-fine robust refinement of an initial flow. The increment over
/// init_flow is estimated from the coarsest level down, so a good
/// initialization survives at full resolution.
FlowField refine_flow(const Image& img1, const Image& img2, const FlowField& init_flow, const FlowParams& params);

struct FlowEstimate {
  FlowField flow;
  AlignResult alignment;
  bool reliable = false;
};

/// Dominant homography, its induced flow, then robust dense refinement.
/// Unreliable alignment is reported on the result, never thrown.
FlowEstimate estimate_flow(const Image& img1, const Image& img2, const FlowParams& params, Rng& rng);

void to_json(nlohmann::json& j, const FlowParams& p);
void from_json(const nlohmann::json& j, FlowParams& p);
void to_json(nlohmann::json& j, const AlignParams& p);
void from_json(const nlohmann::json& j, AlignParams& p);

}  // namespace dualview
