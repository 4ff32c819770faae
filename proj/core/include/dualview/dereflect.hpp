#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "dualview/flow.hpp"
#include "dualview/image.hpp"
#include "dualview/random.hpp"
#include "dualview/warp.hpp"

namespace dualview {

/// Per-pixel/channel minimum where valid (> 0.5), I1 elsewhere. An empty
/// mask means every pixel is valid.
Image min_composite(const Image& i1, const Image& i21, const Mask& valid = {});

/// Smooth minimum m - tau * log((e^{-(a-m)/tau} + e^{-(b-m)/tau}) / 2) with
/// m = min(a, b). Returns x exactly when a = b = x. tau must be positive.
Image soft_min(const Image& i1, const Image& i21, double tau, const Mask& valid = {});
double soft_min(double a, double b, double tau);

/// Agreement weights in [0, 1] for x and y gradients: near 1 where an edge of
/// I1 also appears in I21, near 0 where it does not.
struct EdgeLabel {
  Image wx;
  Image wy;
};

/// Computed on luma. Invalid pixels get weight 1 (no evidence against the
/// edge).
EdgeLabel classify_edges(const Image& i1, const Image& i21, const Mask& valid = {}, double sigma_agg = 2.0);

/// Forward differences: gx(x, y) = u(x+1, y) - u(x, y), zero in the last
/// column; gy likewise in the last row. These are exactly the gradients
/// poisson_reconstruct integrates.
void forward_gradients(const Image& img, Image& gx, Image& gy);

struct PoissonOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;  ///< relative residual ||b - A u|| / ||b||
  bool precondition = true;  ///< DCT preconditioner; false runs plain CG
};

struct PoissonResult {
  Image image;
  bool converged = false;
  int iterations = 0;       ///< worst channel
  double residual = 0.0;    ///< worst channel, relative
};

/// Minimizes ||D u - (gx, gy)||^2 + lambda ||u - anchor||^2 per channel, with
/// D the forward-difference operator above (Neumann boundary). With
/// lambda = 0 the constant mode is fixed to the anchor's mean. Never throws
/// on non-convergence; check `converged`.
PoissonResult poisson_reconstruct(const Image& gx, const Image& gy, const Image& anchor, double lambda,
                                  const PoissonOptions& options = {});

/// Per channel and axis, keeps the I21 gradient where its magnitude is below
/// `margin` times the I1 gradient magnitude on a valid pixel, and the I1
/// gradient otherwise. A moving reflection edge is strong in one view and
/// absent in the other; margin < 1 stops the interpolation-softened copy of a
/// static edge from replacing the sharp one.
void select_min_gradients(const Image& i1, const Image& i21, const Mask& valid, double margin, Image& gx,
                          Image& gy);

enum class DereflectKind { kMinComposite, kSoftMin, kGradientDomain, kGradientMin };

std::string_view to_string(DereflectKind kind);
DereflectKind dereflect_kind_from_string(std::string_view name);

struct DereflectMethod {
  DereflectKind kind = DereflectKind::kMinComposite;
  double tau = 0.02;        ///< soft-min temperature
  double lambda = 0.05;     ///< anchor weight of both gradient methods
  double sigma_agg = 2.0;   ///< edge agreement window
  double margin = 0.5;      ///< gradient-min replacement ratio, in (0, 1]
  PoissonOptions poisson;

  void validate() const;
};

struct DereflectRecord {
  std::string method;
  double tau = 0.0;
  double lambda = 0.0;
  bool alignment_reliable = false;
  AlignDiagnostics alignment;
  double warp_valid_fraction = 0.0;
  bool poisson_converged = true;
  int poisson_iterations = 0;
  double poisson_residual = 0.0;
};

struct DereflectResult {
  Image estimate;
  FlowEstimate flow;
  DereflectRecord record;
};

/// Flow from view 1 to view 2, backward warp of I2 onto view 1, then the
/// selected synthesis.
DereflectResult dereflect_pair(const Image& i1, const Image& i2, const DereflectMethod& method,
                               const FlowParams& flow_params, Rng& rng);

/// Synthesis step alone on an already aligned pair.
Image synthesize(const Image& i1, const Image& i21, const Mask& valid, const DereflectMethod& method,
                 DereflectRecord* record = nullptr);

void to_json(nlohmann::json& j, const DereflectMethod& m);
void from_json(const nlohmann::json& j, DereflectMethod& m);
void to_json(nlohmann::json& j, const DereflectRecord& r);

}  // namespace dualview
