#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "skintrial/colour.hpp"
#include "skintrial/image.hpp"
#include "skintrial/roi.hpp"

namespace skintrial {

struct PatchIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const PatchIndex&, const PatchIndex&) = default;
};

/// Printed colour card: a rows x cols grid of reference colours.
struct CardLayout {
  int rows = 0;
  int cols = 0;
  std::vector<LabColour> reference;  ///< row-major, rows * cols entries
  double margin = 0.5;               ///< fraction of each cell sampled, about its center
  PatchIndex key_patch;              ///< patch used by single-patch calibration

  const LabColour& reference_at(PatchIndex p) const;

  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

/// JSON document: {"rows": R, "cols": C, "margin": m, "key_patch": [r, c],
///                 "reference": [[[L, a, b], ... C entries], ... R rows]}.
/// `margin` defaults to 0.5. Throws ParseError or ValidationError.
CardLayout card_layout_from_json(const nlohmann::json& doc);
CardLayout load_card_layout(const std::filesystem::path& path);
nlohmann::json to_json(const CardLayout& layout);

/// Card patch-grid corners in image coordinates: top-left, top-right, bottom-right, bottom-left.
struct CardAnnotation {
  std::array<Point2, 4> corners;

  /// Throws InvalidArgument unless the corners form a convex quadrilateral of positive area.
  void validate() const;
};

struct PatchObservation {
  PatchIndex index;
  LabColour observed;
};

/// Reference-minus-observed LAB shift.
struct ColourDelta {
  double dL = 0.0;
  double dA = 0.0;
  double dB = 0.0;

  ColourDelta operator-() const { return {-dL, -dA, -dB}; }
  double max_abs() const;
};

/// Cell (row, col) of the card grid, bilinearly interpolated from the corners and shrunk
/// about its center by layout.margin. Throws IndexOutOfGrid.
Roi locate_patch_region(const CardAnnotation& ann, const CardLayout& layout, PatchIndex patch);

/// Channel-wise mean of rgb_to_lab over the ROI pixels. Throws EmptyRoi.
LabColour measure_patch(const ImageRGB& img, const Roi& roi);

ColourDelta compute_delta(const LabColour& reference, const LabColour& observed) noexcept;

/// Shifts every pixel by the delta in LAB, clamps to LAB ranges and converts back to RGB.
ImageRGB apply_delta(const ImageRGB& img, const ColourDelta& d);

/// Single-patch calibration against layout.key_patch. Throws MissingAnnotation or EmptyRoi.
ImageRGB normalize_by_card(const ImageRGB& img, const std::optional<CardAnnotation>& ann,
                           const CardLayout& layout);

/// Delta that normalize_by_card would apply.
ColourDelta card_delta(const ImageRGB& img, const CardAnnotation& ann, const CardLayout& layout);

/// Opt-in multi-patch extension (not the single-patch procedure): per-channel affine fit
/// reference = gain * observed + offset by least squares over every patch.
struct ChannelAffine {
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
};

ChannelAffine fit_card_affine(const ImageRGB& img, const CardAnnotation& ann,
                              const CardLayout& layout);
ImageRGB apply_channel_affine(const ImageRGB& img, const ChannelAffine& fit);

}  // namespace skintrial
