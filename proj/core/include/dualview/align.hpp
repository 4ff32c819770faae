#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualview/homography.hpp"
#include "dualview/image.hpp"
#include "dualview/random.hpp"

namespace dualview {

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

/// Point correspondence between view 1 and view 2.
struct Match {
  Point2 p1;
  Point2 p2;
  double score = 0.0;  ///< zero-normalized cross-correlation, [-1, 1]
};

/// Harris corners (k = 0.04, Gaussian-weighted structure tensor) of a
/// one-channel image. Candidates are 3x3 local maxima above 1% of the
/// strongest response; greedy suppression keeps them at least min_distance
/// apart. At most max_count corners, strongest first.
std::vector<Corner> detect_corners(const Image& gray, int max_count, double min_distance);

/// ZNCC block matching of (2r+1)^2 patches around each corner over integer
/// displacements in [-search, search]^2. Keeps peaks scoring >= 0.5 whose
/// reverse match (img2 -> img1) lands within 1 px of the corner.
std::vector<Match> match_patches(const Image& gray1, const Image& gray2, std::span<const Corner> corners, int radius,
                                 int search);

/// Normalized DLT (Hartley) least-squares homography mapping p1 -> p2.
/// Throws kDegenerateConfiguration when the correspondences do not pin down
/// a unique transform (fewer than 4, or collinear subsets).
Homography fit_homography_dlt(std::span<const Match> matches);

struct AlignParams {
  int max_corners = 400;
  double min_corner_distance = 6.0;
  int patch_radius = 5;
  int search_radius = 24;
  double inlier_threshold = 1.5;  ///< px, forward transfer error
  double confidence = 0.999;
  int max_iterations = 4000;
  int min_matches = 8;
  double min_inlier_ratio = 0.5;
  int workers = 1;
};

struct AlignDiagnostics {
  int corners = 0;
  int matches = 0;
  int inliers = 0;
  double inlier_ratio = 0.0;
  int iterations = 0;
  double residual_p50 = 0.0;
  double residual_p90 = 0.0;
  double residual_max = 0.0;
  bool reliable = false;
  std::string message;
};

struct AlignResult {
  Homography homography;            ///< view-1 pixel -> view-2 pixel
  std::vector<Match> matches;
  std::vector<std::uint8_t> inliers;  ///< one flag per match
  AlignDiagnostics diagnostics;
};

/// RANSAC over 4-match samples with an adaptive stopping rule, then a DLT
/// refit on the consensus set. Because the transmission carries at least
/// alpha >= 0.6 of the contrast, the largest consensus set follows the
/// transmission layer. Never throws on weak data: too few matches or a small
/// consensus set yield a best-effort result flagged unreliable.
AlignResult estimate_dominant_homography(const Image& img1, const Image& img2, const AlignParams& params, Rng& rng);

void to_json(nlohmann::json& j, const AlignDiagnostics& d);
void to_json(nlohmann::json& j, const Homography& h);
void from_json(const nlohmann::json& j, Homography& h);

}  // namespace dualview
