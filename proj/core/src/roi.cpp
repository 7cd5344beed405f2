#include "skintrial/roi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(Point2 p, Point2 a, Point2 b, double tol) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross(a, b, p)) > tol * std::max(len, 1.0)) return false;
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int d1 = sign_of(cross(c, d, a));
  const int d2 = sign_of(cross(c, d, b));
  const int d3 = sign_of(cross(a, b, c));
  const int d4 = sign_of(cross(a, b, d));
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  return (d1 == 0 && on_segment(a, c, d, 0.0)) || (d2 == 0 && on_segment(b, c, d, 0.0)) ||
         (d3 == 0 && on_segment(c, a, b, 0.0)) || (d4 == 0 && on_segment(d, a, b, 0.0));
}

}  // namespace

Roi::Roi(std::vector<Point2> polygon) : polygon_(std::move(polygon)) {
  if (polygon_.size() < 3) throw Error(ErrorKind::InvalidArgument, "ROI needs at least 3 vertices");
  for (const auto& p : polygon_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::InvalidArgument, "ROI vertex is not finite");
    }
  }
  const std::size_t n = polygon_.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(polygon_[i], polygon_[(i + 1) % n], polygon_[j],
                             polygon_[(j + 1) % n])) {
        throw Error(ErrorKind::InvalidArgument, "ROI polygon is self-intersecting");
      }
    }
  }
}

Roi Roi::rectangle(double x0, double y0, double x1, double y1) {
  return Roi({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

bool Roi::contains(Point2 p) const noexcept {
  const std::size_t n = polygon_.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = polygon_[i];
    const Point2 b = polygon_[j];
    if (on_segment(p, a, b, 1e-9)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double Roi::area() const noexcept {
  double s = 0.0;
  const std::size_t n = polygon_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = polygon_[i];
    const Point2 b = polygon_[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return std::abs(s) / 2.0;
}

RoiMask rasterize(const Roi& roi, int width, int height) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : roi.vertices()) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  // Candidate pixels: centers within the polygon's bounding box.
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_x - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_y - 0.5)));
  if (x0 > x1 || y0 > y1) throw Error(ErrorKind::EmptyRoi, "ROI does not cover any pixel center");

  int bx0 = x1 + 1;
  int by0 = y1 + 1;
  int bx1 = x0 - 1;
  int by1 = y0 - 1;
  const int cw = x1 - x0 + 1;
  const int ch = y1 - y0 + 1;
  std::vector<std::uint8_t> full(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch), 0);
  std::size_t count = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (roi.contains({x + 0.5, y + 0.5})) {
        full[static_cast<std::size_t>(y - y0) * static_cast<std::size_t>(cw) +
             static_cast<std::size_t>(x - x0)] = 1;
        ++count;
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
  }
  if (count == 0) throw Error(ErrorKind::EmptyRoi, "ROI does not cover any pixel center");

  RoiMask out;
  out.bounds = {bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};
  out.count = count;
  out.mask.resize(static_cast<std::size_t>(out.bounds.width) *
                  static_cast<std::size_t>(out.bounds.height));
  for (int y = 0; y < out.bounds.height; ++y) {
    for (int x = 0; x < out.bounds.width; ++x) {
      out.mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(out.bounds.width) +
               static_cast<std::size_t>(x)] =
          full[static_cast<std::size_t>(y + by0 - y0) * static_cast<std::size_t>(cw) +
               static_cast<std::size_t>(x + bx0 - x0)];
    }
  }
  return out;
}

double mean_over_roi(const ImageGray& img, const Roi& roi) {
  const RoiMask m = rasterize(roi, img.width(), img.height());
  double sum = 0.0;
  for (int y = 0; y < m.bounds.height; ++y) {
    for (int x = 0; x < m.bounds.width; ++x) {
      if (m.mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(m.bounds.width) +
                 static_cast<std::size_t>(x)]) {
        sum += img(m.bounds.x0 + x, m.bounds.y0 + y);
      }
    }
  }
  return sum / static_cast<double>(m.count);
}

}  // namespace skintrial
