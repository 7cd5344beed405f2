#pragma once

#include <optional>

#include "skintrial/alignment.hpp"
#include "skintrial/card_calibration.hpp"
#include "skintrial/date.hpp"
#include "skintrial/image.hpp"
#include "skintrial/normalization.hpp"
#include "skintrial/roi.hpp"

namespace skintrial {

/// Tile grid and clip factor; the absolute clip limit is derived per image size.
struct ClaheSettings {
  int tiles_x = 4;
  int tiles_y = 4;
  double clip_factor = 40.0;
};

/// What each normalization method needs besides the image.
struct NormalizationContext {
  ClaheSettings clahe;
  const CardLayout* card_layout = nullptr;
  std::optional<CardAnnotation> card;
};

/// Original is the identity. ColourCard throws MissingAnnotation without corners.
ImageRGB normalize_image(const ImageRGB& img, NormalizationMethod method,
                         const NormalizationContext& ctx);

struct SkinColourSample {
  double L_mean = 0.0;
  double a_mean = 0.0;
  double b_mean = 0.0;
  std::size_t pixel_count = 0;
  NormalizationMethod method = NormalizationMethod::Original;
  Date session;
};

/// Mean LAB over `roi` after normalizing with `method`. Throws EmptyRoi or MissingAnnotation.
SkinColourSample skin_colour(const ImageRGB& img, const Roi& roi, NormalizationMethod method,
                             const NormalizationContext& ctx);

// 3x3 edge operators. Absolute response, saturated to 8 bits, edge-replicated borders.
// All throw ImageTooSmall below 3x3.
ImageGray sobel_x(const ImageGray& img);
ImageGray sobel_y(const ImageGray& img);
/// Bitwise OR of sobel_x and sobel_y.
ImageGray sobel_combined(const ImageGray& img);
/// 4-neighbour Laplacian [[0,1,0],[1,-4,1],[0,1,0]].
ImageGray laplacian_magnitude(const ImageGray& img);

struct WrinkleMetrics {
  double sobel_mean = 0.0;      ///< mean of the Sobel-combined image
  double image_mean = 0.0;      ///< mean of the grayscale image
  double wrinkle_ratio = 0.0;   ///< sobel_mean / image_mean
  double laplacian_mean = 0.0;  ///< reported alongside, not part of the ratio
  std::size_t pixel_count = 0;
  Date session;
};

/// Whole-image wrinkle ratio. Throws ImageTooSmall or ZeroMeanImage.
WrinkleMetrics wrinkle_ratio(const ImageGray& img);

/// Wrinkle ratio over `roi`: the edge maps are computed on the crop bounding the ROI pixels,
/// and both means run over the ROI pixels only.
WrinkleMetrics wrinkle_over_roi(const ImageGray& img, const Roi& roi);

/// Maps the reference-session ROI through `transform` (reference -> this session) and
/// measures the wrinkle ratio there.
WrinkleMetrics wrinkle_for_session(const ImageRGB& img, const Roi& reference_roi,
                                   const AlignTransform& transform);

}  // namespace skintrial
