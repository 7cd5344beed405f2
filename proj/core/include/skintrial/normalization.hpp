#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "skintrial/colour.hpp"
#include "skintrial/image.hpp"

namespace skintrial {

enum class NormalizationMethod { Original, HistEqualY, Clahe, ColourCard };

/// CLI/manifest spelling: original, histeq, clahe, card.
std::string_view to_string(NormalizationMethod m) noexcept;
std::optional<NormalizationMethod> parse_normalization_method(std::string_view name) noexcept;

/// Tile grid and absolute clip limit (maximum count per bin of a 256-bin tile histogram).
struct ClaheConfig {
  int tiles_x = 4;
  int tiles_y = 4;
  int clip_limit = 1;
};

/// Clip limit scaled from a per-256-pixel factor: max(1, round(factor * tile_area / 256)),
/// where tile_area is the nominal (width / tiles_x) * (height / tiles_y).
ClaheConfig make_clahe_config(int width, int height, int tiles_x = 4, int tiles_y = 4,
                              double clip_factor = 40.0);

/// Global equalization: v -> round((cdf(v) - cdf_min) / (N - cdf_min) * 255). A constant
/// image is returned unchanged.
ImageGray histogram_equalize_gray(const ImageGray& img);

/// Contrast-limited adaptive equalization over a tiles_x x tiles_y grid. Tile histograms are
/// clipped at cfg.clip_limit and the excess is spread evenly over all 256 bins (remainder one
/// per bin from bin 0). Output values bilinearly interpolate the four nearest tile mappings.
/// Throws ImageTooSmall when the image has fewer pixels than tiles in either direction.
ImageGray clahe_gray(const ImageGray& img, const ClaheConfig& cfg);

/// Luma-only variants: chroma planes pass through untouched.
YuvImage equalize_luma(YuvImage yuv);
YuvImage clahe_luma(YuvImage yuv, const ClaheConfig& cfg);

ImageRGB histogram_equalize_y(const ImageRGB& img);
ImageRGB clahe_y(const ImageRGB& img, const ClaheConfig& cfg);

namespace detail {
/// Clips `hist` at `limit` in place and redistributes the excess; returns the total excess.
long clip_histogram(std::span<long, 256> hist, long limit);
}  // namespace detail

}  // namespace skintrial
