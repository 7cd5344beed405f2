#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "skintrial/alignment.hpp"
#include "skintrial/error.hpp"

namespace skintrial {

namespace {

constexpr std::size_t kMinConsensus = 8;

std::size_t sample_size(TransformKind kind) { return kind == TransformKind::Similarity ? 2 : 3; }

std::optional<Affine2> fit_minimal(TransformKind kind, std::span<const Point2> src,
                                   std::span<const Point2> dst) {
  if (kind == TransformKind::Similarity) {
    const double px = src[1].x - src[0].x;
    const double py = src[1].y - src[0].y;
    const double qx = dst[1].x - dst[0].x;
    const double qy = dst[1].y - dst[0].y;
    const double den = px * px + py * py;
    if (den < 1e-12) return std::nullopt;
    // (a + ib) = dq / dp in complex form.
    const double a = (qx * px + qy * py) / den;
    const double b = (qy * px - qx * py) / den;
    if (a * a + b * b < 1e-24) return std::nullopt;
    return Affine2{{a, -b, dst[0].x - a * src[0].x + b * src[0].y, b, a,
                    dst[0].y - b * src[0].x - a * src[0].y}};
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) m.row(i) << src[static_cast<std::size_t>(i)].x, src[static_cast<std::size_t>(i)].y, 1.0;
  const double det = m.determinant();
  if (std::abs(det) < 1e-9) return std::nullopt;
  const Eigen::Vector3d bx(dst[0].x, dst[1].x, dst[2].x);
  const Eigen::Vector3d by(dst[0].y, dst[1].y, dst[2].y);
  const auto lu = m.partialPivLu();
  const Eigen::Vector3d rx = lu.solve(bx);
  const Eigen::Vector3d ry = lu.solve(by);
  return Affine2{{rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]}};
}

std::optional<Affine2> fit_least_squares(TransformKind kind, std::span<const Point2> src,
                                         std::span<const Point2> dst,
                                         const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  // Centre both point sets for conditioning.
  double sx = 0, sy = 0, dx = 0, dy = 0;
  for (std::size_t i : idx) {
    sx += src[i].x;
    sy += src[i].y;
    dx += dst[i].x;
    dy += dst[i].y;
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  sx *= inv;
  sy *= inv;
  dx *= inv;
  dy *= inv;

  if (kind == TransformKind::Similarity) {
    Eigen::MatrixXd a(2 * n, 2);
    Eigen::VectorXd b(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::size_t i = idx[static_cast<std::size_t>(k)];
      const double x = src[i].x - sx;
      const double y = src[i].y - sy;
      a.row(2 * k) << x, -y;
      a.row(2 * k + 1) << y, x;
      b[2 * k] = dst[i].x - dx;
      b[2 * k + 1] = dst[i].y - dy;
    }
    const Eigen::Vector2d s = a.colPivHouseholderQr().solve(b);
    if (!s.allFinite() || s.squaredNorm() < 1e-24) return std::nullopt;
    return Affine2{{s[0], -s[1], dx - s[0] * sx + s[1] * sy, s[1], s[0],
                    dy - s[1] * sx - s[0] * sy}};
  }
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd bx(n);
  Eigen::VectorXd by(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::size_t i = idx[static_cast<std::size_t>(k)];
    a.row(k) << src[i].x - sx, src[i].y - sy;
    bx[k] = dst[i].x - dx;
    by[k] = dst[i].y - dy;
  }
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < 2) return std::nullopt;
  const Eigen::Vector2d rx = qr.solve(bx);
  const Eigen::Vector2d ry = qr.solve(by);
  return Affine2{{rx[0], rx[1], dx - rx[0] * sx - rx[1] * sy, ry[0], ry[1],
                  dy - ry[0] * sx - ry[1] * sy}};
}

double reprojection_error(const Affine2& t, Point2 s, Point2 d) {
  const Point2 p = t.apply(s);
  return std::hypot(p.x - d.x, p.y - d.y);
}

// Inlier indices and their summed squared error.
std::pair<std::vector<std::size_t>, double> inliers_of(const Affine2& t, std::span<const Point2> src,
                                                       std::span<const Point2> dst, double threshold) {
  std::vector<std::size_t> in;
  double sse = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double e = reprojection_error(t, src[i], dst[i]);
    if (e <= threshold) {
      in.push_back(i);
      sse += e * e;
    }
  }
  return {std::move(in), sse};
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

}  // namespace

std::string_view to_string(TransformKind kind) noexcept {
  return kind == TransformKind::Similarity ? "similarity" : "affine";
}

double AlignTransform::scale() const noexcept { return std::sqrt(std::abs(matrix.determinant())); }

double AlignTransform::rotation() const noexcept { return std::atan2(matrix.m[3], matrix.m[0]); }

AlignTransform AlignTransform::inverse() const {
  AlignTransform t = *this;
  t.matrix = matrix.inverse();
  return t;
}

AlignTransform AlignTransform::identity(TransformKind kind) {
  AlignTransform t;
  t.kind = kind;
  return t;
}

AlignTransform estimate_transform(std::span<const Point2> src, std::span<const Point2> dst,
                                  TransformKind kind, std::uint64_t seed,
                                  const RansacOptions& opts) {
  if (src.size() != dst.size()) {
    throw Error(ErrorKind::LengthMismatch, "correspondence lists differ in length");
  }
  const std::size_t n = src.size();
  const std::size_t s = sample_size(kind);
  if (n < s) {
    throw Error(ErrorKind::InsufficientMatches, std::to_string(n) + " matches, need " +
                                                    std::to_string(s) + " for " +
                                                    std::string(to_string(kind)));
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> best_inliers;
  double best_sse = 0.0;
  long required = opts.max_iterations;
  std::vector<Point2> ms(s);
  std::vector<Point2> md(s);
  std::vector<std::size_t> pick(s);
  for (long it = 0; it < std::min<long>(required, opts.max_iterations); ++it) {
    for (std::size_t k = 0; k < s; ++k) {
      std::size_t cand = 0;
      do {
        cand = draw_index(rng, n);
      } while (std::find(pick.begin(), pick.begin() + static_cast<long>(k), cand) !=
               pick.begin() + static_cast<long>(k));
      pick[k] = cand;
      ms[k] = src[cand];
      md[k] = dst[cand];
    }
    const auto model = fit_minimal(kind, ms, md);
    if (!model) continue;
    auto [in, sse] = inliers_of(*model, src, dst, opts.inlier_threshold);
    if (in.size() > best_inliers.size() || (in.size() == best_inliers.size() && sse < best_sse)) {
      best_inliers = std::move(in);
      best_sse = sse;
      const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
      const double p_fail = 1.0 - std::pow(w, static_cast<double>(s));
      if (p_fail <= 0.0) {
        required = it + 1;
      } else if (p_fail < 1.0) {
        const double needed = std::log(1.0 - opts.confidence) / std::log(p_fail);
        required = std::min<long>(opts.max_iterations, static_cast<long>(std::ceil(needed)));
      }
    }
  }

  const auto no_consensus = [&](std::size_t count) {
    return count < s || (static_cast<double>(count) < 0.5 * static_cast<double>(n) &&
                         count < kMinConsensus);
  };
  if (no_consensus(best_inliers.size())) {
    throw Error(ErrorKind::NoConsensus, "best consensus " + std::to_string(best_inliers.size()) +
                                            " of " + std::to_string(n) + " matches");
  }

  // Refit on inliers until the inlier set stops changing.
  Affine2 model;
  for (int round = 0; round < 10; ++round) {
    const auto fit = fit_least_squares(kind, src, dst, best_inliers);
    if (!fit) throw Error(ErrorKind::NoConsensus, "degenerate inlier configuration");
    model = *fit;
    auto [in, sse] = inliers_of(model, src, dst, opts.inlier_threshold);
    if (in == best_inliers || no_consensus(in.size())) break;
    best_inliers = std::move(in);
  }

  double sse = 0.0;
  for (std::size_t i : best_inliers) {
    const double e = reprojection_error(model, src[i], dst[i]);
    sse += e * e;
  }
  AlignTransform t;
  t.kind = kind;
  t.matrix = model;
  t.inlier_count = best_inliers.size();
  t.inlier_rms = std::sqrt(sse / static_cast<double>(best_inliers.size()));
  return t;
}

AlignTransform estimate_transform(std::span<const MatchPair> matches,
                                  std::span<const Keypoint> query_kps,
                                  std::span<const Keypoint> train_kps, TransformKind kind,
                                  std::uint64_t seed, const RansacOptions& opts) {
  std::vector<Point2> src;
  std::vector<Point2> dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto& m : matches) {
    if (m.query_idx >= query_kps.size() || m.train_idx >= train_kps.size()) {
      throw Error(ErrorKind::InvalidArgument, "match refers to a missing keypoint");
    }
    src.push_back({query_kps[m.query_idx].x, query_kps[m.query_idx].y});
    dst.push_back({train_kps[m.train_idx].x, train_kps[m.train_idx].y});
  }
  return estimate_transform(src, dst, kind, seed, opts);
}

Roi transfer_roi(const Roi& roi, const AlignTransform& t) {
  std::vector<Point2> out;
  out.reserve(roi.vertices().size());
  for (const auto& p : roi.vertices()) out.push_back(t.matrix.apply(p));
  return Roi(std::move(out));
}

}  // namespace skintrial
