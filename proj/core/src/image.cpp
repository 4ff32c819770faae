#include "dualview/image.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace dualview {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kDimensionOverflow: return "dimension overflow";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kSingularHomography: return "singular homography";
    case ErrorCode::kDegenerateConfiguration: return "degenerate configuration";
    case ErrorCode::kTooManyLevels: return "too many pyramid levels";
    case ErrorCode::kEmptyMask: return "empty mask";
    case ErrorCode::kRasterTooSmall: return "raster too small";
    case ErrorCode::kInsufficientSources: return "insufficient sources";
  }
  return "unknown error";
}

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative raster dimension");
  }
  const auto limit = static_cast<unsigned long long>(std::numeric_limits<int>::max());
  const auto total = static_cast<unsigned long long>(width) * static_cast<unsigned long long>(height) *
                     static_cast<unsigned long long>(std::max(channels, 1));
  if (total > limit) {
    throw Error(ErrorCode::kDimensionOverflow,
                std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw Error(ErrorCode::kInvalidArgument, "channel index out of range");
  Image out(width_, height_, 1);
  std::ranges::copy(plane(c), out.data().begin());
  return out;
}

FlowField::FlowField(int width, int height, float u, float v) : width_(width), height_(height) {
  check_dims(width, height, 1);
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  u_.assign(n, u);
  v_.assign(n, v);
}

Image to_gray(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "to_gray expects 1 or 3 channels");
  }
  Image out(img.width(), img.height(), 1);
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  }
  return out;
}

Image clamp(const Image& img, float lo, float hi) {
  Image out = img;
  for (float& s : out.data()) s = std::clamp(s, lo, hi);
  return out;
}

Mask invert_mask(const Mask& m) {
  Mask out = m;
  for (float& s : out.data()) s = 1.0f - s;
  return out;
}

void require_same_extent(const Image& a, const Image& b, const char* what) {
  if (!a.same_extent(b.width(), b.height())) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  require_same_extent(a, b, what);
  if (a.channels() != b.channels()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": channel count differs");
  }
}

}  // namespace dualview
