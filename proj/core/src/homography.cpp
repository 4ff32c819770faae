#include "dualview/homography.hpp"

#include <cmath>
#include <numbers>

namespace dualview {

Homography Homography::from_coefficients(const Coefficients& h) {
  for (double v : h) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kSingularHomography, "non-finite coefficient");
  }
  if (std::abs(h[8]) <= 1e-12) throw Error(ErrorCode::kSingularHomography, "|h33| <= 1e-12");
  Coefficients n;
  for (int i = 0; i < 9; ++i) n[i] = h[i] / h[8];
  n[8] = 1.0;
  Homography out(n);
  double scale = 0.0;
  for (double v : n) scale = std::max(scale, std::abs(v));
  if (std::abs(out.determinant()) <= 1e-12 * scale * scale * scale) {
    throw Error(ErrorCode::kSingularHomography, "determinant vanishes");
  }
  return out;
}

Homography Homography::translation(double tx, double ty) {
  return Homography(Coefficients{1, 0, tx, 0, 1, ty, 0, 0, 1});
}

Homography Homography::rotation(double degrees, double cx, double cy) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  // T(c) * R * T(-c)
  return Homography(Coefficients{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy, 0, 0, 1});
}

Point2 Homography::apply(Point2 p) const noexcept {
  const double w = h_[6] * p.x + h_[7] * p.y + h_[8];
  return {(h_[0] * p.x + h_[1] * p.y + h_[2]) / w, (h_[3] * p.x + h_[4] * p.y + h_[5]) / w};
}

double Homography::denominator(Point2 p) const noexcept { return h_[6] * p.x + h_[7] * p.y + h_[8]; }

double Homography::determinant() const noexcept {
  const auto& m = h_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
  const auto& m = h_;
  const double det = determinant();
  if (std::abs(det) <= 1e-15) throw Error(ErrorCode::kSingularHomography, "cannot invert");
  Coefficients adj{
      m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
      m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
      m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3],
  };
  for (double& v : adj) v /= det;
  return from_coefficients(adj);
}

Homography operator*(const Homography& a, const Homography& b) {
  Homography::Coefficients r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a.h_[3 * i + k] * b.h_[3 * k + j];
      r[3 * i + j] = acc;
    }
  }
  return Homography::from_coefficients(r);
}

}  // namespace dualview
