#pragma once

#include <array>

namespace skintrial {

/// Continuous image coordinate. Pixel (i, j) covers [i, i+1) x [j, j+1), so its
/// center sits at (i + 0.5, j + 0.5).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// 2x3 affine map: x' = m[0] x + m[1] y + m[2], y' = m[3] x + m[4] y + m[5].
struct Affine2 {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static Affine2 identity() { return {}; }
  static Affine2 translation(double tx, double ty) { return {{1.0, 0.0, tx, 0.0, 1.0, ty}}; }
  /// Rotation by `radians` (counter-clockwise in a y-down frame reads clockwise on screen)
  /// and isotropic `scale` about `center`, followed by translation (tx, ty).
  static Affine2 similarity(double scale, double radians, Point2 center = {}, double tx = 0.0,
                            double ty = 0.0);

  Point2 apply(Point2 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }

  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }

  /// Throws InvalidArgument when the linear part is singular.
  Affine2 inverse() const;

  /// (*this) after `first`: apply `first`, then this.
  Affine2 compose(const Affine2& first) const;

  friend bool operator==(const Affine2&, const Affine2&) = default;
};

}  // namespace skintrial
