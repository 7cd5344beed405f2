#include "skintrial/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

using Kernel = std::array<std::array<int, 3>, 3>;

constexpr Kernel kSobelX{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
constexpr Kernel kSobelY{{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};
constexpr Kernel kLaplacian{{{0, 1, 0}, {1, -4, 1}, {0, 1, 0}}};

void require_3x3(const ImageGray& img) {
  if (img.width() < 3 || img.height() < 3) {
    throw Error(ErrorKind::ImageTooSmall, "3x3 operators need an image of at least 3x3");
  }
}

ImageGray convolve_abs(const ImageGray& img, const Kernel& k) {
  require_3x3(img);
  const int w = img.width();
  const int h = img.height();
  ImageGray out(w, h);
  for (int y = 0; y < h; ++y) {
    const int ys[3] = {std::max(y - 1, 0), y, std::min(y + 1, h - 1)};
    for (int x = 0; x < w; ++x) {
      const int xs[3] = {std::max(x - 1, 0), x, std::min(x + 1, w - 1)};
      int acc = 0;
      for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 3; ++i) {
          acc += k[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * img(xs[i], ys[j]);
        }
      }
      out(x, y) = static_cast<std::uint8_t>(std::min(std::abs(acc), 255));
    }
  }
  return out;
}

WrinkleMetrics masked_metrics(const ImageGray& gray, const std::vector<std::uint8_t>* mask) {
  const ImageGray edges = sobel_combined(gray);
  const ImageGray lap = laplacian_magnitude(gray);
  double s = 0.0;
  double g = 0.0;
  double l = 0.0;
  std::size_t n = 0;
  const auto gd = gray.data();
  const auto ed = edges.data();
  const auto ld = lap.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    s += ed[i];
    g += gd[i];
    l += ld[i];
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptyRoi, "no pixels to measure");
  WrinkleMetrics m;
  m.pixel_count = n;
  m.sobel_mean = s / static_cast<double>(n);
  m.image_mean = g / static_cast<double>(n);
  m.laplacian_mean = l / static_cast<double>(n);
  if (m.image_mean <= 0.0) throw Error(ErrorKind::ZeroMeanImage, "image mean is zero");
  m.wrinkle_ratio = m.sobel_mean / m.image_mean;
  return m;
}

}  // namespace

ImageRGB normalize_image(const ImageRGB& img, NormalizationMethod method,
                         const NormalizationContext& ctx) {
  switch (method) {
    case NormalizationMethod::Original:
      return img;
    case NormalizationMethod::HistEqualY:
      return histogram_equalize_y(img);
    case NormalizationMethod::Clahe:
      return clahe_y(img, make_clahe_config(img.width(), img.height(), ctx.clahe.tiles_x,
                                            ctx.clahe.tiles_y, ctx.clahe.clip_factor));
    case NormalizationMethod::ColourCard:
      if (ctx.card_layout == nullptr) {
        throw Error(ErrorKind::InvalidArgument, "colour-card normalization needs a card layout");
      }
      return normalize_by_card(img, ctx.card, *ctx.card_layout);
  }
  return img;
}

SkinColourSample skin_colour(const ImageRGB& img, const Roi& roi, NormalizationMethod method,
                             const NormalizationContext& ctx) {
  const ImageRGB normalized = normalize_image(img, method, ctx);
  const LabColour mean = measure_patch(normalized, roi);
  SkinColourSample s;
  s.L_mean = mean.L;
  s.a_mean = mean.a;
  s.b_mean = mean.b;
  s.pixel_count = rasterize(roi, img.width(), img.height()).count;
  s.method = method;
  return s;
}

ImageGray sobel_x(const ImageGray& img) { return convolve_abs(img, kSobelX); }

ImageGray sobel_y(const ImageGray& img) { return convolve_abs(img, kSobelY); }

ImageGray sobel_combined(const ImageGray& img) {
  const ImageGray gx = sobel_x(img);
  const ImageGray gy = sobel_y(img);
  ImageGray out(img.width(), img.height());
  auto dst = out.data();
  const auto a = gx.data();
  const auto b = gy.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<std::uint8_t>(a[i] | b[i]);
  return out;
}

ImageGray laplacian_magnitude(const ImageGray& img) { return convolve_abs(img, kLaplacian); }

WrinkleMetrics wrinkle_ratio(const ImageGray& img) {
  require_3x3(img);
  return masked_metrics(img, nullptr);
}

WrinkleMetrics wrinkle_over_roi(const ImageGray& img, const Roi& roi) {
  const RoiMask m = rasterize(roi, img.width(), img.height());
  const ImageGray region = crop(img, m.bounds);
  require_3x3(region);
  return masked_metrics(region, &m.mask);
}

WrinkleMetrics wrinkle_for_session(const ImageRGB& img, const Roi& reference_roi,
                                   const AlignTransform& transform) {
  return wrinkle_over_roi(to_grayscale(img), transfer_roi(reference_roi, transform));
}

}  // namespace skintrial
