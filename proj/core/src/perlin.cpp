#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualview/filter.hpp"
#include "dualview/synthgen.hpp"

namespace dualview {

PerlinLattice::PerlinLattice(Rng& rng) {
  std::array<std::uint16_t, 256> p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<std::uint16_t>(i);
  for (std::size_t i = p.size() - 1; i > 0; --i) {
    std::swap(p[i], p[static_cast<std::size_t>(rng.below(i + 1))]);
  }
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = p[i & 255];
  for (std::size_t i = 0; i < 256; ++i) {
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    gx_[i] = std::cos(a);
    gy_[i] = std::sin(a);
  }
}

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

}  // namespace

double PerlinLattice::operator()(double x, double y) const noexcept {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double dx = x - fx0;
  const double dy = y - fy0;
  const auto xi = static_cast<int>(static_cast<long long>(fx0) & 255);
  const auto yi = static_cast<int>(static_cast<long long>(fy0) & 255);
  auto corner = [&](int cx, int cy, double ox, double oy) {
    const int g = perm_[perm_[(xi + cx) & 255] + ((yi + cy) & 255)];
    return gx_[g] * ox + gy_[g] * oy;
  };
  const double n00 = corner(0, 0, dx, dy);
  const double n10 = corner(1, 0, dx - 1.0, dy);
  const double n01 = corner(0, 1, dx, dy - 1.0);
  const double n11 = corner(1, 1, dx - 1.0, dy - 1.0);
  const double u = fade(dx);
  const double v = fade(dy);
  const double nx0 = n00 + u * (n10 - n00);
  const double nx1 = n01 + u * (n11 - n01);
  return nx0 + v * (nx1 - nx0);
}

Image perlin_fractal(Rng& rng, int width, int height, int octaves, double persistence) {
  if (octaves < 1) throw Error(ErrorCode::kInvalidArgument, "octaves must be >= 1");
  if (!(persistence >= 0.0 && persistence <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "persistence must lie in [0, 1]");
  }
  const PerlinLattice lattice(rng);
  // Octave 0 is anchored at the origin so lattice points land on pixels;
  // finer octaves get their own offset to decorrelate them.
  std::vector<std::pair<double, double>> offsets(static_cast<std::size_t>(octaves), {0.0, 0.0});
  for (int o = 1; o < octaves; ++o) offsets[o] = {rng.uniform(0.0, 256.0), rng.uniform(0.0, 256.0)};

  const double cells = 4.0;
  const double base = cells / static_cast<double>(std::min(width, height));
  Image out(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      double amp = 1.0;
      double freq = base;
      for (int o = 0; o < octaves; ++o) {
        sum += amp * lattice(x * freq + offsets[o].first, y * freq + offsets[o].second);
        amp *= persistence;
        freq *= 2.0;
      }
      out.at(x, y) = static_cast<float>(sum);
    }
  }
  return out;
}

SpotMask bright_spot_mask(Rng& rng, int width, int height, const GenConfig& cfg) {
  SpotMask s;
  s.persistence = cfg.persistence.draw(rng);
  s.blur_sigma = cfg.spot_blur_sigma.draw(rng);
  const Image noise = perlin_fractal(rng, width, height, cfg.octaves, s.persistence);
  Image binary(width, height, 1);
  auto dst = binary.data();
  const auto src = noise.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] > cfg.spot_threshold ? 1.0f : 0.0f;
  s.mask = clamp(gaussian_blur(binary, s.blur_sigma), 0.0f, 1.0f);
  return s;
}

// ---------------------------------------------------------------------------
// Procedural sources

namespace {

struct Rgb {
  double r, g, b;
};

Rgb random_color(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

void blend(Image& img, int x, int y, const Rgb& c, double a) {
  img.at(x, y, 0) = static_cast<float>((1.0 - a) * img.at(x, y, 0) + a * c.r);
  img.at(x, y, 1) = static_cast<float>((1.0 - a) * img.at(x, y, 1) + a * c.g);
  img.at(x, y, 2) = static_cast<float>((1.0 - a) * img.at(x, y, 2) + a * c.b);
}

}  // namespace

Image procedural_source(std::uint64_t seed, int width, int height, SourceKind style) {
  Rng rng(seed);
  Image img(width, height, 3);
  const double scale = std::min(width, height);

  // Smooth shaded background.
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  const PerlinLattice shade_r(rng), shade_g(rng), shade_b(rng);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double t = std::clamp(0.5 + ((x - 0.5 * width) * ca + (y - 0.5 * height) * sa) / scale, 0.0, 1.0);
      const double px = 3.0 * x / scale, py = 3.0 * y / scale;
      img.at(x, y, 0) = static_cast<float>((1 - t) * c0.r + t * c1.r + 0.3 * shade_r(px, py));
      img.at(x, y, 1) = static_cast<float>((1 - t) * c0.g + t * c1.g + 0.3 * shade_g(px, py));
      img.at(x, y, 2) = static_cast<float>((1 - t) * c0.b + t * c1.b + 0.3 * shade_b(px, py));
    }
  }

  // Overlapping shapes: rectangles give corners, ellipses give curved edges,
  // striped panels give repetitive texture.
  const int shapes = style == SourceKind::kWarped ? 60 : (style == SourceKind::kRenderedHomography ? 45 : 35);
  for (int s = 0; s < shapes; ++s) {
    const int kind = static_cast<int>(rng.below(3));
    const Rgb c = random_color(rng);
    const double opacity = rng.uniform(0.6, 1.0);
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double rx = rng.uniform(0.02, 0.15) * scale;
    const double ry = rng.uniform(0.02, 0.15) * scale;
    const double period = rng.uniform(3.0, 12.0);
    const Rgb c2 = random_color(rng);
    const int x0 = std::max(0, static_cast<int>(cx - rx)), x1 = std::min(width - 1, static_cast<int>(cx + rx));
    const int y0 = std::max(0, static_cast<int>(cy - ry)), y1 = std::min(height - 1, static_cast<int>(cy + ry));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double nx = (x - cx) / rx, ny = (y - cy) / ry;
        if (kind == 1 && nx * nx + ny * ny > 1.0) continue;
        const bool stripe = kind == 2 && std::fmod(std::abs(x - cx + 0.5 * (y - cy)), period) < 0.5 * period;
        blend(img, x, y, stripe ? c2 : c, opacity);
      }
    }
  }

  // Multi-scale luminance texture.
  Rng detail_rng(split_seed(seed, 1));
  const PerlinLattice mid(detail_rng), fine(detail_rng);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d = 0.12 * mid(x / 24.0, y / 24.0) + 0.06 * fine(x / 6.0, y / 6.0);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(img.at(x, y, c) + static_cast<float>(d), 0.0f, 1.0f);
    }
  }
  return img;
}

}  // namespace dualview
