#include "skintrial/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::InvalidArgument, "image dimensions must be positive, got " +
                                                std::to_string(width) + "x" +
                                                std::to_string(height));
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

void check_rect(int width, int height, const PixelRect& r) {
  if (r.width < 1 || r.height < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > width ||
      r.y0 + r.height > height) {
    throw Error(ErrorKind::InvalidArgument, "crop rectangle outside image");
  }
}

// Bilinear sample at continuous coordinate (sx, sy) of channel `c` in an interleaved raster.
double sample(std::span<const std::uint8_t> data, int width, int height, int channels, int c,
              double sx, double sy) {
  const double fx = sx - 0.5;
  const double fy = sy - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double ax = fx - x0f;
  const double ay = fy - y0f;
  const auto clampi = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  const int x0 = clampi(x0f, width - 1);
  const int x1 = clampi(x0f + 1.0, width - 1);
  const int y0 = clampi(y0f, height - 1);
  const int y1 = clampi(y0f + 1.0, height - 1);
  const auto at = [&](int x, int y) {
    return static_cast<double>(
        data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
              static_cast<std::size_t>(x)) *
                 static_cast<std::size_t>(channels) +
             static_cast<std::size_t>(c)]);
  };
  const double top = at(x0, y0) * (1.0 - ax) + at(x1, y0) * ax;
  const double bottom = at(x0, y1) * (1.0 - ax) + at(x1, y1) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

std::vector<std::uint8_t> warp(std::span<const std::uint8_t> src, int width, int height,
                               int channels, const Affine2& forward, int out_width,
                               int out_height) {
  const Affine2 inv = forward.inverse();
  std::vector<std::uint8_t> out(area(out_width, out_height) * static_cast<std::size_t>(channels));
  std::size_t k = 0;
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2 s = inv.apply({x + 0.5, y + 0.5});
      for (int c = 0; c < channels; ++c) {
        const double v = sample(src, width, height, channels, c, s.x, s.y);
        out[k++] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace

Affine2 Affine2::similarity(double scale, double radians, Point2 center, double tx, double ty) {
  const double c = scale * std::cos(radians);
  const double s = scale * std::sin(radians);
  // Rotate/scale about center, then translate.
  return {{c, -s, center.x - c * center.x + s * center.y + tx, s, c,
           center.y - s * center.x - c * center.y + ty}};
}

Affine2 Affine2::inverse() const {
  const double det = determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-15) {
    throw Error(ErrorKind::InvalidArgument, "affine transform is singular");
  }
  const double a = m[4] / det;
  const double b = -m[1] / det;
  const double d = -m[3] / det;
  const double e = m[0] / det;
  return {{a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])}};
}

Affine2 Affine2::compose(const Affine2& first) const {
  const auto& f = first.m;
  return {{m[0] * f[0] + m[1] * f[3], m[0] * f[1] + m[1] * f[4], m[0] * f[2] + m[1] * f[5] + m[2],
           m[3] * f[0] + m[4] * f[3], m[3] * f[1] + m[4] * f[4],
           m[3] * f[2] + m[4] * f[5] + m[5]}};
}

ImageGray::ImageGray(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(area(width, height), fill);
}

ImageGray::ImageGray(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != area(width, height)) {
    throw Error(ErrorKind::InvalidArgument, "gray buffer length does not match dimensions");
  }
}

ImageRGB::ImageRGB(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.resize(area(width, height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

ImageRGB::ImageRGB(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != area(width, height) * 3) {
    throw Error(ErrorKind::InvalidArgument, "RGB buffer length does not match dimensions");
  }
}

ImageGray crop(const ImageGray& img, const PixelRect& rect) {
  check_rect(img.width(), img.height(), rect);
  ImageGray out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) out(x, y) = img(rect.x0 + x, rect.y0 + y);
  }
  return out;
}

ImageRGB crop(const ImageRGB& img, const PixelRect& rect) {
  check_rect(img.width(), img.height(), rect);
  ImageRGB out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) out.set(x, y, img.at(rect.x0 + x, rect.y0 + y));
  }
  return out;
}

ImageGray transpose(const ImageGray& img) {
  ImageGray out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out(y, x) = img(x, y);
  }
  return out;
}

ImageGray warp_affine(const ImageGray& src, const Affine2& forward, int out_width,
                      int out_height) {
  check_dims(out_width, out_height);
  return {out_width, out_height,
          warp(src.data(), src.width(), src.height(), 1, forward, out_width, out_height)};
}

ImageRGB warp_affine(const ImageRGB& src, const Affine2& forward, int out_width, int out_height) {
  check_dims(out_width, out_height);
  return {out_width, out_height,
          warp(src.data(), src.width(), src.height(), 3, forward, out_width, out_height)};
}

}  // namespace skintrial
