#pragma once

#include <span>
#include <vector>

#include "dualview/image.hpp"

namespace dualview {

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma). sigma <= 0 yields {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur per channel with clamped (replicated) borders.
/// Constant images are preserved exactly up to float rounding.
Image gaussian_blur(const Image& img, double sigma);

/// Sum over the (2r+1)^2 window centred on each pixel, clamped to the raster
/// (windows are truncated at the borders, not padded).
std::vector<double> box_sum(std::span<const double> values, int width, int height, int radius);

/// Same as gaussian_blur on a single double-precision plane.
std::vector<double> gaussian_blur_plane(std::span<const double> values, int width, int height, double sigma);

}  // namespace dualview
