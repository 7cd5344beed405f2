#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "skintrial/alignment.hpp"
#include "skintrial/colour.hpp"
#include "skintrial/error.hpp"
#include "skintrial/fixture.hpp"
#include "test_support.hpp"

namespace skintrial {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// 90 degrees clockwise: source (x, y) lands at (H - y, x).
ImageGray rotate90(const ImageGray& img) {
  ImageGray out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out(img.height() - 1 - y, x) = img(x, y);
  }
  return out;
}

ImageGray temple_gray(const Affine2& pose, std::uint64_t seed = 21, int size = 512) {
  const auto scene = fixture::make_temple_scene(size, seed, 12);
  return to_grayscale(fixture::render_temple(scene, 12, pose, seed + 1));
}

TEST(Sift, ConstantImageHasNoKeypoints) {
  EXPECT_TRUE(detect_keypoints(ImageGray(64, 64, 128), 100).empty());
}

TEST(Sift, TooSmall) {
  try {
    detect_keypoints(ImageGray(31, 64), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ImageTooSmall);
  }
}

TEST(Sift, OneKeypointPerIsolatedBlob) {
  const std::vector<Point2> centers{{30.5, 28.0}, {90.0, 34.25}, {40.0, 95.5}, {100.5, 100.0}};
  std::vector<double> acc(128 * 128, 20.0);
  for (const auto& c : centers) {
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
        acc[static_cast<std::size_t>(y) * 128 + x] += 200.0 * std::exp(-(dx * dx + dy * dy) / 18.0);
      }
    }
  }
  ImageGray img(128, 128);
  for (std::size_t i = 0; i < acc.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(std::lround(acc[i]));

  const auto kps = detect_keypoints(img, 1000);
  ASSERT_FALSE(kps.empty());
  for (const auto& c : centers) {
    const bool hit = std::any_of(kps.begin(), kps.end(),
                                 [&](const Keypoint& k) { return dist({k.x, k.y}, c) <= 2.0; });
    EXPECT_TRUE(hit) << c.x << "," << c.y;
  }
  for (const auto& k : kps) {
    const bool near = std::any_of(centers.begin(), centers.end(),
                                  [&](Point2 c) { return dist({k.x, k.y}, c) <= 2.0; });
    EXPECT_TRUE(near) << k.x << "," << k.y;
    EXPECT_GT(k.scale, 0.0);
    EXPECT_GE(k.orientation, 0.0);
    EXPECT_LT(k.orientation, 2 * std::numbers::pi);
  }
}

TEST(Sift, RepeatableUnderQuarterTurn) {
  const ImageGray img = testing::blob_texture(160, 128, 17, 90);
  const ImageGray rot = rotate90(img);
  const auto a = detect_keypoints(img, 100000);
  const auto b = detect_keypoints(rot, 100000);
  ASSERT_GT(a.size(), 20u);
  std::size_t found = 0;
  for (const auto& k : a) {
    const Point2 mapped{img.height() - k.y, k.x};
    const bool hit = std::any_of(b.begin(), b.end(),
                                 [&](const Keypoint& q) { return dist({q.x, q.y}, mapped) <= 2.0; });
    found += hit;
  }
  EXPECT_GE(static_cast<double>(found), 0.8 * static_cast<double>(a.size()))
      << found << " of " << a.size();
}

TEST(Sift, SortedAndTruncated) {
  const ImageGray img = testing::blob_texture(128, 128, 5);
  const auto all = detect_keypoints(img, 100000);
  ASSERT_GT(all.size(), 10u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i - 1].response, all[i].response);
  const auto top = detect_keypoints(img, 10);
  ASSERT_EQ(top.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(top[i].x, all[i].x);
}

TEST(Sift, DescriptorNorms) {
  const ImageGray img = testing::blob_texture(128, 128, 6);
  const SiftFeatures f = extract_features(img, 200);
  ASSERT_EQ(f.keypoints.size(), f.descriptors.size());
  for (const auto& d : f.descriptors) {
    double n2 = 0.0;
    for (float v : d.values) {
      EXPECT_GE(v, 0.0f);
      n2 += static_cast<double>(v) * v;
    }
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-3);
  }
}

TEST(Sift, FlatWindowGivesZeroDescriptor) {
  const ImageGray img(64, 64, 90);
  const Keypoint k{32.0, 32.0, 2.0, 0.0, 0.0, 0, 1};
  const auto d = compute_descriptors(img, std::span(&k, 1));
  ASSERT_EQ(d.size(), 1u);
  for (float v : d[0].values) EXPECT_EQ(v, 0.0f);
}

TEST(Sift, BrightnessOffsetBarelyMovesDescriptors) {
  ImageGray img = testing::blob_texture(160, 160, 8);
  for (auto& v : img.data()) v = std::min<std::uint8_t>(v, 225);
  ImageGray bright = img;
  for (auto& v : bright.data()) v = static_cast<std::uint8_t>(v + 30);
  const auto kps = detect_keypoints(img, 150);
  ASSERT_GT(kps.size(), 20u);
  const auto da = compute_descriptors(img, kps);
  const auto db = compute_descriptors(bright, kps);
  std::size_t beaten = 0;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const double same = descriptor_distance(da[i], db[i]);
    std::size_t farther = 0;
    for (std::size_t j = 0; j < kps.size(); ++j) {
      if (j != i && descriptor_distance(da[i], db[j]) > same) ++farther;
    }
    if (static_cast<double>(farther) >= 0.95 * static_cast<double>(kps.size() - 1)) ++beaten;
    EXPECT_LT(same, 0.3);
  }
  EXPECT_EQ(beaten, kps.size());
}

Descriptor unit_descriptor(std::size_t hot) {
  Descriptor d;
  d.values[hot] = 1.0f;
  return d;
}

TEST(MatchKnn, SelfMatchIsIdentity) {
  std::vector<Descriptor> ds;
  for (std::size_t i = 0; i < 20; ++i) ds.push_back(unit_descriptor(i * 3));
  const auto m = match_knn(ds, ds, 0.75);
  ASSERT_EQ(m.size(), ds.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].query_idx, i);
    EXPECT_EQ(m[i].train_idx, i);
    EXPECT_EQ(m[i].distance, 0.0);
    EXPECT_EQ(m[i].ratio, 0.0);
  }
}

TEST(MatchKnn, DuplicateTrainDescriptorsFailRatioTest) {
  const std::vector<Descriptor> q{unit_descriptor(0)};
  const std::vector<Descriptor> t{unit_descriptor(0), unit_descriptor(0), unit_descriptor(5)};
  EXPECT_TRUE(match_knn(q, t, 0.75).empty());
  EXPECT_TRUE(match_knn(q, t, 1.0).empty());
}

TEST(MatchKnn, EmptyInputs) {
  const std::vector<Descriptor> one{unit_descriptor(0)};
  for (auto [q, t] : {std::pair{std::span<const Descriptor>{}, std::span<const Descriptor>(one)},
                      std::pair{std::span<const Descriptor>(one), std::span<const Descriptor>{}}}) {
    try {
      match_knn(q, t, 0.75);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::EmptyDescriptorSet);
    }
  }
}

TEST(MatchKnn, OneToOneAndRatioMonotone) {
  const SiftFeatures a = extract_features(temple_gray(Affine2::identity()), 400);
  const SiftFeatures b = extract_features(
      temple_gray(Affine2::similarity(1.04, 8 * kDeg, {256, 256}, 5, -3)), 400);
  std::size_t prev = 0;
  for (double r : {0.3, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.0}) {
    const auto m = match_knn(a.descriptors, b.descriptors, r);
    EXPECT_GE(m.size(), prev) << r;
    prev = m.size();
    std::vector<std::size_t> train;
    for (const auto& p : m) {
      EXPECT_LT(p.ratio, r);
      EXPECT_GE(p.ratio, 0.0);
      EXPECT_GE(p.distance, 0.0);
      train.push_back(p.train_idx);
    }
    std::sort(train.begin(), train.end());
    EXPECT_EQ(std::adjacent_find(train.begin(), train.end()), train.end());
  }
}

TEST(MatchKnn, KnownCorrespondencesMostlyCorrect) {
  const Affine2 pa = Affine2::similarity(0.98, -3 * kDeg, {256, 256}, -4, 2);
  const Affine2 pb = Affine2::similarity(1.05, 9 * kDeg, {256, 256}, 6, -5);
  const SiftFeatures a = extract_features(temple_gray(pa), 500);
  const SiftFeatures b = extract_features(temple_gray(pb), 500);
  const Affine2 truth = pb.compose(pa.inverse());  // image a -> image b
  const auto m = match_knn(a.descriptors, b.descriptors, kDefaultRatioThreshold);
  ASSERT_GT(m.size(), 30u);
  std::size_t correct = 0;
  for (const auto& p : m) {
    const Keypoint& q = a.keypoints[p.query_idx];
    const Keypoint& t = b.keypoints[p.train_idx];
    correct += dist(truth.apply({q.x, q.y}), {t.x, t.y}) <= 3.0;
  }
  EXPECT_GE(static_cast<double>(correct), 0.9 * static_cast<double>(m.size()))
      << correct << " of " << m.size();
}

struct Correspondences {
  std::vector<Point2> src;
  std::vector<Point2> dst;
};

Correspondences synthetic(const Affine2& t, std::size_t n, double outlier_fraction,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  Correspondences c;
  const auto outliers = static_cast<std::size_t>(std::lround(outlier_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p{u(rng), u(rng)};
    c.src.push_back(p);
    if (i < outliers) {
      c.dst.push_back({u(rng), u(rng)});
    } else {
      const Point2 q = t.apply(p);
      c.dst.push_back({q.x + noise(rng), q.y + noise(rng)});
    }
  }
  return c;
}

TEST(Ransac, IdentityCorrespondences) {
  const Correspondences c = synthetic(Affine2::identity(), 30, 0.0, 1);
  for (auto kind : {TransformKind::Similarity, TransformKind::Affine}) {
    const AlignTransform t = estimate_transform(c.src, c.src, kind, 7);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(t.matrix.m[i], Affine2::identity().m[i], 1e-6);
    EXPECT_NEAR(t.inlier_rms, 0.0, 1e-6);
    EXPECT_EQ(t.inlier_count, 30u);
  }
}

TEST(Ransac, RotationScaleWithOutliers) {
  const Affine2 truth = Affine2::similarity(1.1, 15 * kDeg, {250, 250}, 12, -7);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Correspondences c = synthetic(truth, 60, 0.3, seed);
    const AlignTransform t = estimate_transform(c.src, c.dst, TransformKind::Similarity, seed);
    ok += std::abs(t.rotation() - 15 * kDeg) <= 0.5 * kDeg && std::abs(t.scale() / 1.1 - 1) <= 0.01;
  }
  EXPECT_GE(ok, 95);
}

TEST(Ransac, AffineModelRecoversShear) {
  const Affine2 truth{{1.1, 0.15, 4.0, -0.05, 0.92, -6.0}};
  const Correspondences c = synthetic(truth, 60, 0.25, 3);
  const AlignTransform t = estimate_transform(c.src, c.dst, TransformKind::Affine, 3);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(t.matrix.m[i], truth.m[i], i % 3 == 2 ? 0.5 : 0.01);
}

TEST(Ransac, Errors) {
  const std::vector<Point2> one{{1, 2}};
  try {
    estimate_transform(one, one, TransformKind::Affine, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientMatches);
  }
  const Correspondences noise = synthetic(Affine2::identity(), 40, 1.0, 5);
  try {
    estimate_transform(noise.src, noise.dst, TransformKind::Similarity, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConsensus);
  }
  const std::vector<Point2> a{{0, 0}, {1, 1}, {2, 2}};
  try {
    estimate_transform(a, std::span<const Point2>(a).first(2), TransformKind::Similarity, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(Ransac, SameSeedSameBits) {
  const Correspondences c =
      synthetic(Affine2::similarity(0.9, -20 * kDeg, {100, 100}, 3, 3), 80, 0.4, 11);
  const AlignTransform a = estimate_transform(c.src, c.dst, TransformKind::Similarity, 99);
  const AlignTransform b = estimate_transform(c.src, c.dst, TransformKind::Similarity, 99);
  EXPECT_EQ(a.matrix.m, b.matrix.m);
  EXPECT_EQ(a.inlier_count, b.inlier_count);
  EXPECT_EQ(a.inlier_rms, b.inlier_rms);
}

TEST(Alignment, SelfAlignmentIsIdentity) {
  const ImageGray img = temple_gray(Affine2::identity());
  const SiftFeatures f = extract_features(img, 500);
  const auto m = match_knn(f.descriptors, f.descriptors, kDefaultRatioThreshold);
  const AlignTransform t =
      estimate_transform(m, f.keypoints, f.keypoints, TransformKind::Similarity, 42);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(t.matrix.m[i], Affine2::identity().m[i], 1e-3);
}

TEST(Alignment, RecoversRenderedPose) {
  const Affine2 pa = Affine2::identity();
  const Affine2 pb = Affine2::similarity(1.06, 7 * kDeg, {256, 256}, -8, 5);
  const SiftFeatures a = extract_features(temple_gray(pa), 600);
  const SiftFeatures b = extract_features(temple_gray(pb), 600);
  const auto m = match_knn(a.descriptors, b.descriptors, kDefaultRatioThreshold);
  const AlignTransform t = estimate_transform(m, a.keypoints, b.keypoints, TransformKind::Similarity, 1);
  EXPECT_NEAR(t.rotation(), 7 * kDeg, 0.3 * kDeg);
  EXPECT_NEAR(t.scale(), 1.06, 0.005);
  for (Point2 p : {Point2{150, 150}, Point2{400, 160}, Point2{256, 420}}) {
    EXPECT_LT(dist(t.matrix.apply(p), pb.apply(p)), 1.0);
  }
}

TEST(TransferRoi, IdentityTranslationRoundTrip) {
  const Roi roi({{10, 10}, {50, 12}, {45, 40}, {12, 35}});
  const Roi same = transfer_roi(roi, AlignTransform::identity());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(same.vertices()[i].x, roi.vertices()[i].x);
    EXPECT_EQ(same.vertices()[i].y, roi.vertices()[i].y);
  }
  AlignTransform shift = AlignTransform::identity();
  shift.matrix = Affine2::translation(10, 0);
  const Roi moved = transfer_roi(roi, shift);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(moved.vertices()[i].x, roi.vertices()[i].x + 10);
    EXPECT_DOUBLE_EQ(moved.vertices()[i].y, roi.vertices()[i].y);
  }
  AlignTransform t = AlignTransform::identity();
  t.matrix = Affine2::similarity(1.3, 0.4, {20, 20}, 5, -2);
  const Roi back = transfer_roi(transfer_roi(roi, t), t.inverse());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(back.vertices()[i].x, roi.vertices()[i].x, 1e-6);
    EXPECT_NEAR(back.vertices()[i].y, roi.vertices()[i].y, 1e-6);
  }
}

TEST(AlignTransform, SimilarityScaleIsIsotropic) {
  const Correspondences c = synthetic(Affine2::similarity(0.8, 1.0, {}, 0, 0), 40, 0.1, 2);
  const AlignTransform t = estimate_transform(c.src, c.dst, TransformKind::Similarity, 2);
  const auto& m = t.matrix.m;
  EXPECT_NEAR(std::hypot(m[0], m[3]), std::hypot(m[1], m[4]), 1e-6);
  EXPECT_GE(t.inlier_count, 2u);
}

}  // namespace
}  // namespace skintrial
