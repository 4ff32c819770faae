#include "dualview/filter.hpp"

#include <algorithm>
#include <cmath>

namespace dualview {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[i + radius] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

namespace {

// Horizontal then vertical pass; borders replicate the edge sample.
template <typename Src>
std::vector<double> separable(const Src& src, int width, int height, const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(static_cast<std::size_t>(width) * height);
  std::vector<double> out(tmp.size());
  for (int y = 0; y < height; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, width - 1);
        acc += taps[k + radius] * static_cast<double>(src[row + xx]);
      }
      tmp[row + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, height - 1);
        acc += taps[k + radius] * tmp[static_cast<std::size_t>(yy) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0.0) || img.empty()) return img;
  const auto taps = gaussian_kernel(sigma);
  Image out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    const auto blurred = separable(img.plane(c), img.width(), img.height(), taps);
    auto dst = out.plane(c);
    std::ranges::transform(blurred, dst.begin(), [](double v) { return static_cast<float>(v); });
  }
  return out;
}

std::vector<double> gaussian_blur_plane(std::span<const double> values, int width, int height, double sigma) {
  if (!(sigma > 0.0)) return {values.begin(), values.end()};
  return separable(values, width, height, gaussian_kernel(sigma));
}

std::vector<double> box_sum(std::span<const double> values, int width, int height, int radius) {
  std::vector<double> tmp(values.size());
  std::vector<double> out(values.size());
  for (int y = 0; y < height; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      const int lo = std::max(0, x - radius);
      const int hi = std::min(width - 1, x + radius);
      for (int xx = lo; xx <= hi; ++xx) acc += values[row + xx];
      tmp[row + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    const int lo = std::max(0, y - radius);
    const int hi = std::min(height - 1, y + radius);
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int yy = lo; yy <= hi; ++yy) acc += tmp[static_cast<std::size_t>(yy) * width + x];
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

}  // namespace dualview
