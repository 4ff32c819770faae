#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "dualview/image.hpp"
#include "dualview/random.hpp"
#include "dualview/synthgen.hpp"

namespace dualview::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() / ("dualview_" + tag + "_" + std::to_string(rng.next() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  Rng rng(seed);
  Image img(w, h, c);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

/// Smooth, well-textured one-channel image: a few incommensurate sinusoids.
/// Every window of a few pixels has gradient energy in both directions.
inline Image sine_texture(int w, int h, double phase = 0.0) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.18 * std::sin(0.31 * x + 0.17 * y + phase) + 0.14 * std::cos(0.23 * y - 0.11 * x) +
                       0.1 * std::sin(0.53 * x) * std::cos(0.47 * y + phase);
      img.at(x, y) = static_cast<float>(v);
    }
  }
  return img;
}

/// Photo-like RGB texture from the library's procedural source.
inline Image photo(int w, int h, std::uint64_t seed) { return procedural_source(seed, w, h); }

/// out(x, y) = src(x + dx, y + dy) with integer offsets, edge-replicated.
inline Image shift_image(const Image& src, int dx, int dy) {
  Image out(src.width(), src.height(), src.channels());
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < src.width(); ++x) {
        const int sx = std::clamp(x + dx, 0, src.width() - 1);
        const int sy = std::clamp(y + dy, 0, src.height() - 1);
        out.at(x, y, c) = src.at(sx, sy, c);
      }
    }
  }
  return out;
}

inline double mean_abs_diff(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return acc / static_cast<double>(a.size());
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return m;
}

}  // namespace dualview::test
