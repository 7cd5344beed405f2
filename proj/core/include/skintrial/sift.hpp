#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "skintrial/image.hpp"

namespace skintrial {

/// Scale-space keypoint. (x, y) use the continuous pixel convention of Point2; `scale` is the
/// Gaussian sigma in image pixels and `orientation` is radians in [0, 2*pi) measured in the
/// y-down image frame.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;
  double orientation = 0.0;
  double response = 0.0;
  int octave = 0;  ///< pyramid octave the point was found in
  int layer = 1;   ///< scale layer within the octave (1..octave_layers)
};

struct Descriptor {
  std::array<float, 128> values{};
};

struct SiftOptions {
  int octave_layers = 3;
  double sigma = 1.6;
  double input_blur = 0.5;
  double contrast_threshold = 0.04;
  double edge_threshold = 10.0;
};

struct SiftFeatures {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

/// Difference-of-Gaussians extrema with sub-pixel refinement, low-contrast and edge rejection,
/// and orientation assignment (one keypoint per dominant orientation). Sorted by descending
/// response and truncated to `max_count`. Throws ImageTooSmall below 32x32.
std::vector<Keypoint> detect_keypoints(const ImageGray& img, std::size_t max_count,
                                       const SiftOptions& opts = {});

/// 4x4 spatial cells x 8 orientation bins around each keypoint, rotated into the keypoint
/// orientation, L2-normalized, clamped at 0.2 and renormalized. A window without gradient
/// yields the zero vector.
std::vector<Descriptor> compute_descriptors(const ImageGray& img, std::span<const Keypoint> kps,
                                            const SiftOptions& opts = {});

/// Detection and description sharing one scale-space pyramid.
SiftFeatures extract_features(const ImageGray& img, std::size_t max_count,
                              const SiftOptions& opts = {});

double descriptor_distance(const Descriptor& a, const Descriptor& b) noexcept;

}  // namespace skintrial
