#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skintrial/geometry.hpp"

namespace skintrial {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Single-channel 8-bit raster, row-major.
class ImageGray {
 public:
  ImageGray(int width, int height, std::uint8_t fill = 0);
  ImageGray(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }

  std::uint8_t operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) noexcept { return data_[index(x, y)]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const ImageGray&, const ImageGray&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Interleaved 8-bit RGB raster, row-major.
class ImageRGB {
 public:
  ImageRGB(int width, int height, Rgb fill = {});
  ImageRGB(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size() / 3; }

  Rgb at(int x, int y) const noexcept {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    const std::size_t i = index(x, y);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           3;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Pixel rectangle [x0, x0+width) x [y0, y0+height).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

ImageGray crop(const ImageGray& img, const PixelRect& rect);
ImageRGB crop(const ImageRGB& img, const PixelRect& rect);

ImageGray transpose(const ImageGray& img);

/// Resamples `src` so that output pixel centers p satisfy src_point = inverse(forward)(p).
/// `forward` maps source coordinates to destination coordinates. Bilinear sampling with
/// edge replication outside the source.
ImageGray warp_affine(const ImageGray& src, const Affine2& forward, int out_width, int out_height);
ImageRGB warp_affine(const ImageRGB& src, const Affine2& forward, int out_width, int out_height);

}  // namespace skintrial
