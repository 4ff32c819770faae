#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dualview/error.hpp"

namespace dualview {

/// Planar floating-point raster. Samples are stored channel by channel, each
/// plane row-major. Nominal range is [0, 1]; transient values outside it are
/// allowed and only clamped on encode.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<float> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  bool same_extent(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }

  Image channel(int c) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return static_cast<std::size_t>(c) * plane_size() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Soft or binary per-pixel mask, values in [0, 1].
using Mask = Image;

/// Dense displacement field in pixel units: pixel p of view 1 corresponds to
/// p + (u, v) in view 2.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, float u = 0.0f, float v = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return u_.size(); }

  float& u(int x, int y) noexcept { return u_[index(x, y)]; }
  float& v(int x, int y) noexcept { return v_[index(x, y)]; }
  float u(int x, int y) const noexcept { return u_[index(x, y)]; }
  float v(int x, int y) const noexcept { return v_[index(x, y)]; }

  std::span<float> u_data() noexcept { return u_; }
  std::span<float> v_data() noexcept { return v_; }
  std::span<const float> u_data() const noexcept { return u_; }
  std::span<const float> v_data() const noexcept { return v_; }

  bool same_extent(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> u_;
  std::vector<float> v_;
};

/// Luma with weights (0.299, 0.587, 0.114). One-channel input is returned as is.
Image to_gray(const Image& img);

/// Per-sample clamp to [lo, hi].
Image clamp(const Image& img, float lo, float hi);

/// Mask with every pixel set to 1 - m.
Mask invert_mask(const Mask& m);

void require_same_extent(const Image& a, const Image& b, const char* what);
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace dualview
