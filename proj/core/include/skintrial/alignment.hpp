#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "skintrial/geometry.hpp"
#include "skintrial/roi.hpp"
#include "skintrial/sift.hpp"

namespace skintrial {

struct MatchPair {
  std::size_t query_idx = 0;
  std::size_t train_idx = 0;
  double distance = 0.0;  ///< Euclidean descriptor distance to the nearest train descriptor
  double ratio = 0.0;     ///< nearest / second-nearest distance
};

inline constexpr double kDefaultRatioThreshold = 0.75;

/// Two-nearest-neighbour matching with the ratio test (keep iff ratio < ratio_threshold).
/// A zero second-nearest distance counts as ratio 1; a single train descriptor counts as
/// ratio 0. Train-side duplicates are resolved greedily by ascending distance, so the result
/// is one-to-one. Output is ordered by query index. Throws EmptyDescriptorSet.
std::vector<MatchPair> match_knn(std::span<const Descriptor> query,
                                 std::span<const Descriptor> train, double ratio_threshold);

enum class TransformKind { Similarity, Affine };

std::string_view to_string(TransformKind kind) noexcept;

/// Robustly estimated map from query-image to train-image coordinates.
struct AlignTransform {
  TransformKind kind = TransformKind::Similarity;
  Affine2 matrix;
  std::size_t inlier_count = 0;
  double inlier_rms = 0.0;

  /// Isotropic scale of a similarity (geometric mean of singular values for affine).
  double scale() const noexcept;
  /// Rotation angle in radians, atan2(m[3], m[0]).
  double rotation() const noexcept;

  AlignTransform inverse() const;
  /// Identity with no inliers; used for sessions that are not aligned.
  static AlignTransform identity(TransformKind kind = TransformKind::Similarity);
};

struct RansacOptions {
  int max_iterations = 2000;
  double inlier_threshold = 3.0;  ///< reprojection error in pixels
  double confidence = 0.999;      ///< early exit once this consensus probability is reached
};

/// RANSAC over minimal samples (2 matches for Similarity, 3 for Affine) drawn from a
/// 64-bit Mersenne Twister seeded with `seed`, followed by a least-squares refit on the
/// inliers. Throws InsufficientMatches, or NoConsensus when the best inlier set is below
/// both half the matches and 8 matches.
AlignTransform estimate_transform(std::span<const MatchPair> matches,
                                  std::span<const Keypoint> query_kps,
                                  std::span<const Keypoint> train_kps, TransformKind kind,
                                  std::uint64_t seed, const RansacOptions& opts = {});

/// Point-correspondence form of estimate_transform: maps src[i] towards dst[i].
AlignTransform estimate_transform(std::span<const Point2> src, std::span<const Point2> dst,
                                  TransformKind kind, std::uint64_t seed,
                                  const RansacOptions& opts = {});

Roi transfer_roi(const Roi& roi, const AlignTransform& t);

}  // namespace skintrial
