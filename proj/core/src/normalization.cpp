#include "skintrial/normalization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

using Histogram = std::array<long, 256>;
using Lut = std::array<std::uint8_t, 256>;

// Equalization mapping for a histogram holding `total` samples. `identity` is used when the
// samples all share one value.
Lut equalization_lut(const Histogram& hist, long total, bool identity) {
  Lut lut{};
  if (identity) {
    for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
    return lut;
  }
  long cdf_min = 0;
  for (long h : hist) {
    if (h > 0) {
      cdf_min = h;
      break;
    }
  }
  const double denom = static_cast<double>(total - cdf_min);
  long cdf = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    cdf += hist[v];
    // Values below the smallest occurring one map to 0.
    const double scaled = static_cast<double>(std::max(0L, cdf - cdf_min)) / denom * 255.0;
    lut[v] = static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
  }
  return lut;
}

int distinct_values(const Histogram& hist) {
  return static_cast<int>(std::count_if(hist.begin(), hist.end(), [](long h) { return h > 0; }));
}

// Tile k spans [edge(k), edge(k+1)).
int tile_edge(int k, int extent, int tiles) {
  return static_cast<int>(static_cast<long long>(k) * extent / tiles);
}

// Neighbouring tile indices and the weight of the second one for pixel center `p`.
struct Interp {
  int lo;
  int hi;
  double w;
};

std::vector<Interp> interpolation_table(int extent, int tiles) {
  std::vector<double> centers(static_cast<std::size_t>(tiles));
  for (int k = 0; k < tiles; ++k) {
    centers[static_cast<std::size_t>(k)] =
        0.5 * (tile_edge(k, extent, tiles) + tile_edge(k + 1, extent, tiles));
  }
  std::vector<Interp> table(static_cast<std::size_t>(extent));
  for (int i = 0; i < extent; ++i) {
    const double p = i + 0.5;
    Interp t{0, 0, 0.0};
    if (p <= centers.front()) {
      t = {0, 0, 0.0};
    } else if (p >= centers.back()) {
      t = {tiles - 1, tiles - 1, 0.0};
    } else {
      int k = 0;
      while (k + 1 < tiles && centers[static_cast<std::size_t>(k + 1)] <= p) ++k;
      const double c0 = centers[static_cast<std::size_t>(k)];
      const double c1 = centers[static_cast<std::size_t>(k + 1)];
      t = {k, k + 1, (p - c0) / (c1 - c0)};
    }
    table[static_cast<std::size_t>(i)] = t;
  }
  return table;
}

}  // namespace

std::string_view to_string(NormalizationMethod m) noexcept {
  switch (m) {
    case NormalizationMethod::Original: return "original";
    case NormalizationMethod::HistEqualY: return "histeq";
    case NormalizationMethod::Clahe: return "clahe";
    case NormalizationMethod::ColourCard: return "card";
  }
  return "original";
}

std::optional<NormalizationMethod> parse_normalization_method(std::string_view name) noexcept {
  if (name == "original") return NormalizationMethod::Original;
  if (name == "histeq") return NormalizationMethod::HistEqualY;
  if (name == "clahe") return NormalizationMethod::Clahe;
  if (name == "card") return NormalizationMethod::ColourCard;
  return std::nullopt;
}

ClaheConfig make_clahe_config(int width, int height, int tiles_x, int tiles_y,
                              double clip_factor) {
  if (tiles_x < 1 || tiles_y < 1) {
    throw Error(ErrorKind::InvalidArgument, "CLAHE tile counts must be >= 1");
  }
  if (!(clip_factor > 0.0)) throw Error(ErrorKind::InvalidArgument, "clip factor must be > 0");
  const double tile_area = static_cast<double>(width / tiles_x) * (height / tiles_y);
  const long limit = std::max(1L, std::lround(clip_factor * tile_area / 256.0));
  return {tiles_x, tiles_y, static_cast<int>(std::min<long>(limit, 1L << 30))};
}

namespace detail {

long clip_histogram(std::span<long, 256> hist, long limit) {
  long excess = 0;
  for (auto& h : hist) {
    if (h > limit) {
      excess += h - limit;
      h = limit;
    }
  }
  const long per_bin = excess / 256;
  const long residual = excess % 256;
  for (std::size_t v = 0; v < 256; ++v) {
    hist[v] += per_bin + (static_cast<long>(v) < residual ? 1 : 0);
  }
  return excess;
}

}  // namespace detail

ImageGray histogram_equalize_gray(const ImageGray& img) {
  Histogram hist{};
  for (std::uint8_t v : img.data()) ++hist[v];
  if (distinct_values(hist) <= 1) return img;
  const Lut lut = equalization_lut(hist, static_cast<long>(img.pixel_count()), false);
  ImageGray out(img.width(), img.height());
  auto dst = out.data();
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

ImageGray clahe_gray(const ImageGray& img, const ClaheConfig& cfg) {
  if (cfg.tiles_x < 1 || cfg.tiles_y < 1 || cfg.clip_limit < 1) {
    throw Error(ErrorKind::InvalidArgument, "CLAHE config needs tiles >= 1 and clip_limit >= 1");
  }
  if (img.width() < cfg.tiles_x || img.height() < cfg.tiles_y) {
    throw Error(ErrorKind::ImageTooSmall, "image smaller than the CLAHE tile grid");
  }
  const int tx = cfg.tiles_x;
  const int ty = cfg.tiles_y;

  std::vector<Lut> luts(static_cast<std::size_t>(tx) * static_cast<std::size_t>(ty));
  for (int j = 0; j < ty; ++j) {
    const int y0 = tile_edge(j, img.height(), ty);
    const int y1 = tile_edge(j + 1, img.height(), ty);
    for (int i = 0; i < tx; ++i) {
      const int x0 = tile_edge(i, img.width(), tx);
      const int x1 = tile_edge(i + 1, img.width(), tx);
      Histogram hist{};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) ++hist[img(x, y)];
      }
      const bool constant = distinct_values(hist) <= 1;
      detail::clip_histogram(hist, cfg.clip_limit);
      const long total = static_cast<long>(x1 - x0) * (y1 - y0);
      luts[static_cast<std::size_t>(j) * static_cast<std::size_t>(tx) + static_cast<std::size_t>(i)] =
          equalization_lut(hist, total, constant);
    }
  }

  const auto cols = interpolation_table(img.width(), tx);
  const auto rows = interpolation_table(img.height(), ty);
  const auto lut_at = [&](int i, int j) -> const Lut& {
    return luts[static_cast<std::size_t>(j) * static_cast<std::size_t>(tx) +
                static_cast<std::size_t>(i)];
  };

  ImageGray out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const Interp& r = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < img.width(); ++x) {
      const Interp& c = cols[static_cast<std::size_t>(x)];
      const std::uint8_t v = img(x, y);
      const double top = (1.0 - c.w) * lut_at(c.lo, r.lo)[v] + c.w * lut_at(c.hi, r.lo)[v];
      const double bottom = (1.0 - c.w) * lut_at(c.lo, r.hi)[v] + c.w * lut_at(c.hi, r.hi)[v];
      const double value = (1.0 - r.w) * top + r.w * bottom;
      out(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return out;
}

YuvImage equalize_luma(YuvImage yuv) {
  yuv.y = histogram_equalize_gray(yuv.y);
  return yuv;
}

YuvImage clahe_luma(YuvImage yuv, const ClaheConfig& cfg) {
  yuv.y = clahe_gray(yuv.y, cfg);
  return yuv;
}

ImageRGB histogram_equalize_y(const ImageRGB& img) {
  return yuv_to_rgb(equalize_luma(rgb_to_yuv(img)));
}

ImageRGB clahe_y(const ImageRGB& img, const ClaheConfig& cfg) {
  return yuv_to_rgb(clahe_luma(rgb_to_yuv(img), cfg));
}

}  // namespace skintrial
