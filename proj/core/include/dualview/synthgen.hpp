#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualview/homography.hpp"
#include "dualview/image.hpp"
#include "dualview/random.hpp"

namespace dualview {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double draw(Rng& rng) const { return rng.uniform(lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Bounds for one random planar motion, applied about the raster centre.
struct MotionBounds {
  double max_translation = 0.0;  ///< px, per component
  double max_rotation = 0.0;     ///< degrees
  double max_perspective = 0.0;  ///< bound on |h31|, |h32| in centred pixel coordinates
  bool integer_translation = false;  ///< round translation to whole pixels
};

/// Which pool a sample's layers were drawn from. The three slots mirror a
/// rendered / warped-photo / rendered-with-homography training mixture; any
/// image pool can fill any slot.
enum class SourceKind { kRendered = 0, kWarped = 1, kRenderedHomography = 2 };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view name);

struct GenConfig {
  int out_size = 512;
  Range alpha{0.6, 0.9};
  Range refl_blur_sigma{0.0, 3.0};  ///< px
  Range spot_blur_sigma{1.0, 5.0};  ///< px
  Range persistence{0.3, 1.0};
  int octaves = 4;
  double spot_threshold = 1.0;  ///< noise units
  double spot_gain = 2.0;       ///< 0 disables bright spots
  MotionBounds inter_view{8.0, 1.5, 2e-5};  ///< view 1 -> view 2 motion of each layer
  MotionBounds view_jitter{4.0, 1.0, 1e-5};  ///< placement of each layer in view 1
  std::array<double, 3> source_mixture{0.6, 0.3, 0.1};
  double min_coverage = 0.7;  ///< fraction of view pixels that must map inside the source
  int max_resamples = 32;
  std::uint64_t master_seed = 0;

  /// Throws kInvalidArgument naming every violated constraint.
  void validate() const;
};

/// Everything drawn while composing one sample.
struct SampleParams {
  std::uint64_t seed = 0;
  SourceKind source_kind = SourceKind::kRendered;
  int transmission_source = -1;
  int reflection_source = -1;
  double alpha = 1.0;
  double refl_blur_sigma = 0.0;
  double spot_persistence = 0.0;
  double spot_blur_sigma = 0.0;
  double spot_gain = 0.0;
  Homography h_t1, h_t2;  ///< transmission source -> view k
  Homography h_r1, h_r2;  ///< reflection source -> view k
  int resamples = 0;

  /// View-1 -> view-2 motion of the transmission layer: H_T2 * H_T1^-1.
  Homography transmission_motion() const;
  Homography reflection_motion() const;
};

/// One generated dual-view item. Masks S1/S2 are the bright-spot masks in
/// view coordinates; occlusion masks are 1 where a pixel has no counterpart.
struct SamplePair {
  std::string id;
  Image i1, i2;
  Image t1, t2;
  Image r1, r2;
  Image s1, s2;
  FlowField f12, f21;
  Mask occl12, occl21;
  SampleParams params;

  /// Ground truth the evaluation compares against: alpha * T1.
  Image target() const;
};

/// Independent motions for the transmission and reflection layers, each a
/// translation * rotation * perspective perturbation about the centre of an
/// out_size raster, drawn within cfg.inter_view.
std::pair<Homography, Homography> sample_layer_homographies(Rng& rng, const GenConfig& cfg);

/// One random motion within `bounds` about (cx, cy). Retries near-singular
/// draws a bounded number of times.
Homography sample_motion(Rng& rng, const MotionBounds& bounds, double cx, double cy);

/// Single-octave gradient-lattice noise over a lattice drawn from rng.
class PerlinLattice {
 public:
  explicit PerlinLattice(Rng& rng);
  /// Noise at lattice coordinates (x, y); zero on integer lattice points,
  /// bounded by sqrt(2)/2 in magnitude.
  double operator()(double x, double y) const noexcept;

 private:
  std::array<std::uint16_t, 512> perm_{};
  std::array<double, 256> gx_{};
  std::array<double, 256> gy_{};
};

/// Fractal sum over o = 0..octaves-1 of persistence^o * perlin(2^o f p),
/// with the base frequency putting 4 lattice cells across the smaller
/// raster dimension. One channel, unnormalized noise units.
Image perlin_fractal(Rng& rng, int width, int height, int octaves, double persistence);

struct SpotMask {
  Image mask;
  double persistence = 0.0;
  double blur_sigma = 0.0;
};

/// Binarized fractal noise (noise > cfg.spot_threshold) softened by a
/// Gaussian blur with sigma drawn from cfg.spot_blur_sigma.
SpotMask bright_spot_mask(Rng& rng, int width, int height, const GenConfig& cfg);

/// Builds both views from a transmission and a reflection source:
/// I_k = clamp(alpha T_k + (1 - alpha) R_k + S_k (1 - alpha) spot_gain, 0, 1).
/// Sources must cover an out_size raster after warping.
SamplePair compose_views(const Image& transmission_src, const Image& reflection_src, Rng& rng,
                         const GenConfig& cfg);

/// Photo-like procedural RGB texture (smooth shading, overlapping shapes,
/// multi-scale noise) used when no photo pool is supplied.
Image procedural_source(std::uint64_t seed, int width, int height, SourceKind style = SourceKind::kRendered);

void to_json(nlohmann::json& j, const GenConfig& cfg);
void from_json(const nlohmann::json& j, GenConfig& cfg);
void to_json(nlohmann::json& j, const SampleParams& p);
void from_json(const nlohmann::json& j, SampleParams& p);

}  // namespace dualview
