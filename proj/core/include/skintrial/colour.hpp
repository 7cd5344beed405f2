#pragma once

#include <cstdint>

#include "skintrial/image.hpp"

namespace skintrial {

/// CIELAB triple (D65 white, sRGB primaries).
struct LabColour {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColour&, const LabColour&) = default;
};

inline constexpr double kLabLMin = 0.0;
inline constexpr double kLabLMax = 100.0;
inline constexpr double kLabABMin = -128.0;
inline constexpr double kLabABMax = 127.0;

/// Clamps each channel into L in [0, 100], a and b in [-128, 127].
LabColour clamp_lab(LabColour c) noexcept;
bool lab_in_range(const LabColour& c) noexcept;

/// Full-range BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
std::uint8_t luma(Rgb c) noexcept;
ImageGray to_grayscale(const ImageRGB& img);

/// Full-range BT.601 YCbCr (JFIF scaling): Y as luma(),
/// U = 128 - 0.168736 R - 0.331264 G + 0.5 B, V = 128 + 0.5 R - 0.418688 G - 0.081312 B,
/// each rounded and clamped to [0, 255]. The chroma scaling keeps every channel inside
/// 8 bits, so the inverse is accurate to 2 levels for every RGB input.
struct Yuv {
  std::uint8_t y = 0;
  std::uint8_t u = 128;
  std::uint8_t v = 128;

  friend bool operator==(const Yuv&, const Yuv&) = default;
};

Yuv rgb_to_yuv(Rgb c) noexcept;
Rgb yuv_to_rgb(Yuv c) noexcept;

/// Planar YUV image; all three planes share dimensions.
struct YuvImage {
  ImageGray y;
  ImageGray u;
  ImageGray v;
};

YuvImage rgb_to_yuv(const ImageRGB& img);
ImageRGB yuv_to_rgb(const YuvImage& yuv);

/// sRGB (8-bit) -> CIELAB.
///   1. c = v / 255, linearized: c <= 0.04045 ? c / 12.92 : ((c + 0.055) / 1.055)^2.4
///   2. XYZ = M * rgb_linear with the IEC 61966-2-1 D65 matrix
///   3. f(t) = t > (6/29)^3 ? cbrt(t) : t / (3 (6/29)^2) + 4/29 on X/Xn, Y/Yn, Z/Zn
///      with (Xn, Yn, Zn) = (0.95047, 1, 1.08883)
///   4. L = 116 f(Y) - 16, a = 500 (f(X) - f(Y)), b = 200 (f(Y) - f(Z))
LabColour rgb_to_lab(Rgb c) noexcept;

/// Exact inverse of rgb_to_lab followed by rounding; out-of-gamut channels clamp to [0, 255].
Rgb lab_to_rgb(const LabColour& lab) noexcept;

}  // namespace skintrial
