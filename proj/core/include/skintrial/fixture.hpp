#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skintrial/card_calibration.hpp"
#include "skintrial/colour.hpp"
#include "skintrial/geometry.hpp"
#include "skintrial/image.hpp"
#include "skintrial/roi.hpp"

// Synthetic trial data: rendered cheek and temple images with known ground truth.
namespace skintrial::fixture {

/// 4 x 6 card with synthetic reference colours; the key patch (1, 3) is purple.
CardLayout synthetic_card_layout();

/// Card patch grid as the parallelogram spanned from `origin` by a width x height rectangle
/// rotated by `radians`.
CardAnnotation card_quad(Point2 origin, double width, double height, double radians);

/// Paints the card reference colours, with dark gutters between cells. The annotation is
/// treated as the parallelogram through its top-left, top-right and bottom-left corners.
void paint_card(ImageRGB& img, const CardAnnotation& ann, const CardLayout& layout);

/// Skin of the given mean colour with a gentle lightness ripple (phase from `pattern_seed`)
/// and per-pixel noise (from `noise_seed`).
ImageRGB render_skin(int width, int height, const LabColour& skin, std::uint64_t pattern_seed,
                     std::uint64_t noise_seed);

/// Cheek region used by generated trials.
Roi cheek_roi(int size);

/// Applies a uniform LAB shift (the cast) with the same code path as card correction.
ImageRGB apply_cast(const ImageRGB& img, const LabColour& cast);

/// Elliptical Gaussian spot: `sigma` along `angle`, `sigma_minor` across it.
struct Blob {
  Point2 center;
  double sigma = 0.0;
  double sigma_minor = 0.0;
  double angle = 0.0;
  double amplitude = 0.0;
};

struct Line {
  Point2 a;
  Point2 b;
  double sigma = 0.0;
  double depth = 0.0;
};

/// Temple texture in canonical coordinates of a size x size frame.
struct TempleScene {
  int size = 0;
  double base = 150.0;
  std::vector<Blob> blobs;
  std::vector<Line> lines;  ///< wrinkle lines, drawn in order, inside temple_roi()
};

TempleScene make_temple_scene(int size, std::uint64_t seed, std::size_t max_lines = 16);

/// Canonical wrinkle region of a scene of the given size.
Roi temple_roi(int size);

/// Renders the scene seen through `pose` (canonical -> image) with the first `line_count`
/// wrinkle lines.
ImageRGB render_temple(const TempleScene& scene, std::size_t line_count, const Affine2& pose,
                       std::uint64_t noise_seed);

struct TrialOptions {
  int volunteers = 12;
  int sessions = 10;
  int size = 512;
  int drifted = 6;
  std::uint64_t seed = 7;
  double b_drift = -8.0;  ///< total change of skin b over the trial, drifted volunteers
  std::size_t wrinkle_lines_start = 16;
  std::size_t wrinkle_lines_end = 6;
  std::size_t control_lines = 11;
  bool irregular_attendance = false;
};

struct TrialSummary {
  std::filesystem::path manifest;
  std::vector<std::string> volunteer_ids;
  std::vector<std::string> drifted_ids;
  std::size_t image_count = 0;
};

/// Writes images, card.json, manifest.json and truth.json under `out_dir`.
TrialSummary generate_trial(const std::filesystem::path& out_dir, const TrialOptions& opts);

}  // namespace skintrial::fixture
