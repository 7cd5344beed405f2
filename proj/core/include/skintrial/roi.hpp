#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skintrial/geometry.hpp"
#include "skintrial/image.hpp"

namespace skintrial {

/// Simple polygon in continuous image coordinates.
class Roi {
 public:
  /// Throws InvalidArgument for fewer than 3 vertices, non-finite coordinates
  /// or a self-intersecting outline.
  explicit Roi(std::vector<Point2> polygon);

  static Roi rectangle(double x0, double y0, double x1, double y1);

  std::span<const Point2> vertices() const noexcept { return polygon_; }

  /// Point-in-polygon; points on the outline count as inside.
  bool contains(Point2 p) const noexcept;

  double area() const noexcept;

 private:
  std::vector<Point2> polygon_;
};

/// Pixels whose centers fall inside an Roi, clipped to an image.
struct RoiMask {
  PixelRect bounds;                ///< tight pixel bounding box of the selected pixels
  std::vector<std::uint8_t> mask;  ///< bounds.width * bounds.height, 1 = inside
  std::size_t count = 0;
};

/// Throws EmptyRoi when no pixel center of a width x height image lies inside `roi`.
RoiMask rasterize(const Roi& roi, int width, int height);

/// Mean of the pixels selected by `roi`. Throws EmptyRoi.
double mean_over_roi(const ImageGray& img, const Roi& roi);

}  // namespace skintrial
