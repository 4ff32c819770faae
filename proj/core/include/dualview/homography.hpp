#pragma once

#include <array>

#include "dualview/error.hpp"

namespace dualview {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Planar projective transform, row-major 3x3, normalized so h33 = 1.
/// Maps pixel coordinates (pixel centres at integers) of one raster to another.
class Homography {
 public:
  using Coefficients = std::array<double, 9>;

  /// Identity.
  Homography() = default;

  /// Normalizes by h33. Throws kSingularHomography when |h33| <= 1e-12 or the
  /// matrix is numerically singular.
  static Homography from_coefficients(const Coefficients& h);

  static Homography translation(double tx, double ty);
  /// Rotation by `degrees` about (cx, cy).
  static Homography rotation(double degrees, double cx, double cy);

  const Coefficients& coefficients() const noexcept { return h_; }
  double operator()(int row, int col) const noexcept { return h_[3 * row + col]; }

  Point2 apply(Point2 p) const noexcept;
  /// Homogeneous denominator at p; positive for points in front of the plane.
  double denominator(Point2 p) const noexcept;

  Homography inverse() const;
  double determinant() const noexcept;

  /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  friend Homography operator*(const Homography& a, const Homography& b);

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  explicit Homography(const Coefficients& h) : h_(h) {}

  Coefficients h_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

}  // namespace dualview
