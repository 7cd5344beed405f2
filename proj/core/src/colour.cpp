#include "skintrial/colour.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace skintrial {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 kRgbToXyz{{{0.4124564, 0.3575761, 0.1804375},
                          {0.2126729, 0.7151522, 0.0721750},
                          {0.0193339, 0.1191920, 0.9503041}}};

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

constexpr double kDelta = 6.0 / 29.0;

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 r{};
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

const Mat3& xyz_to_rgb() {
  static const Mat3 inv = invert(kRgbToXyz);
  return inv;
}

const std::array<double, 256>& linear_lut() {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[static_cast<std::size_t>(i)] =
          c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return lut;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double f) {
  return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

double gamma_encode(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

std::uint8_t to_u8(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

LabColour clamp_lab(LabColour c) noexcept {
  return {std::clamp(c.L, kLabLMin, kLabLMax), std::clamp(c.a, kLabABMin, kLabABMax),
          std::clamp(c.b, kLabABMin, kLabABMax)};
}

bool lab_in_range(const LabColour& c) noexcept {
  return c.L >= kLabLMin && c.L <= kLabLMax && c.a >= kLabABMin && c.a <= kLabABMax &&
         c.b >= kLabABMin && c.b <= kLabABMax;
}

std::uint8_t luma(Rgb c) noexcept {
  return to_u8(0.299 * c.r + 0.587 * c.g + 0.114 * c.b);
}

ImageGray to_grayscale(const ImageRGB& img) {
  ImageGray out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = luma({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
  }
  return out;
}

Yuv rgb_to_yuv(Rgb c) noexcept {
  const double r = c.r;
  const double g = c.g;
  const double b = c.b;
  return {luma(c), to_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
          to_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b)};
}

Rgb yuv_to_rgb(Yuv c) noexcept {
  const double y = c.y;
  const double u = c.u - 128.0;
  const double v = c.v - 128.0;
  return {to_u8(y + 1.402 * v), to_u8(y - 0.344136 * u - 0.714136 * v), to_u8(y + 1.772 * u)};
}

YuvImage rgb_to_yuv(const ImageRGB& img) {
  YuvImage out{ImageGray(img.width(), img.height()), ImageGray(img.width(), img.height()),
               ImageGray(img.width(), img.height())};
  const auto src = img.data();
  auto y = out.y.data();
  auto u = out.u.data();
  auto v = out.v.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Yuv p = rgb_to_yuv(Rgb{src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    y[i] = p.y;
    u[i] = p.u;
    v[i] = p.v;
  }
  return out;
}

ImageRGB yuv_to_rgb(const YuvImage& yuv) {
  ImageRGB out(yuv.y.width(), yuv.y.height());
  const auto y = yuv.y.data();
  const auto u = yuv.u.data();
  const auto v = yuv.v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Rgb p = yuv_to_rgb(Yuv{y[i], u[i], v[i]});
    dst[3 * i] = p.r;
    dst[3 * i + 1] = p.g;
    dst[3 * i + 2] = p.b;
  }
  return out;
}

LabColour rgb_to_lab(Rgb c) noexcept {
  const auto& lut = linear_lut();
  const double r = lut[c.r];
  const double g = lut[c.g];
  const double b = lut[c.b];
  const auto& m = kRgbToXyz;
  const double x = m[0][0] * r + m[0][1] * g + m[0][2] * b;
  const double y = m[1][0] * r + m[1][1] * g + m[1][2] * b;
  const double z = m[2][0] * r + m[2][1] * g + m[2][2] * b;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  // The matrix rows sum to the white point only to 7 digits; keep L <= 100.
  return clamp_lab({116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)});
}

Rgb lab_to_rgb(const LabColour& lab) noexcept {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double x = kWhiteX * lab_f_inv(fx);
  const double y = kWhiteY * lab_f_inv(fy);
  const double z = kWhiteZ * lab_f_inv(fz);
  const auto& m = xyz_to_rgb();
  const auto channel = [&](int row) {
    const auto& r = m[static_cast<std::size_t>(row)];
    const double lin = std::clamp(r[0] * x + r[1] * y + r[2] * z, 0.0, 1.0);
    return to_u8(255.0 * gamma_encode(lin));
  };
  return {channel(0), channel(1), channel(2)};
}

}  // namespace skintrial
