#include "skintrial/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>

#include <Eigen/Dense>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

constexpr int kBorder = 5;
constexpr int kMaxRefineSteps = 5;
constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0 * kOriSigmaFactor;
constexpr double kOriPeakRatio = 0.8;
constexpr int kDescCells = 4;
constexpr int kDescBins = 8;
constexpr double kDescCellScale = 3.0;
constexpr float kDescClamp = 0.2f;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height) {}

  float operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
  float& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
};

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(w);
    sum += w;
  }
  for (auto& w : k) w = static_cast<float>(w / sum);
  return k;
}

// Separable Gaussian blur with edge replication.
Plane gaussian_blur(const Plane& src, double sigma) {
  if (sigma <= 0.0) return src;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(src.w, src.h);
  std::vector<float> row(static_cast<std::size_t>(src.w + 2 * r));
  for (int y = 0; y < src.h; ++y) {
    for (int x = -r; x < src.w + r; ++x) {
      row[static_cast<std::size_t>(x + r)] = src(std::clamp(x, 0, src.w - 1), y);
    }
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      for (int i = 0; i <= 2 * r; ++i) acc += k[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(x + i)];
      tmp(x, y) = acc;
    }
  }
  Plane out(src.w, src.h);
  std::vector<float> acc(static_cast<std::size_t>(src.w));
  for (int y = 0; y < src.h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (int i = -r; i <= r; ++i) {
      const float w = k[static_cast<std::size_t>(i + r)];
      const float* line = &tmp.v[static_cast<std::size_t>(std::clamp(y + i, 0, src.h - 1)) * src.w];
      for (int x = 0; x < src.w; ++x) acc[static_cast<std::size_t>(x)] += w * line[x];
    }
    std::copy(acc.begin(), acc.end(), &out.v[static_cast<std::size_t>(y) * src.w]);
  }
  return out;
}

Plane downsample(const Plane& src) {
  Plane out((src.w + 1) / 2, (src.h + 1) / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) out(x, y) = src(2 * x, 2 * y);
  }
  return out;
}

class ScaleSpace {
 public:
  ScaleSpace(const ImageGray& img, const SiftOptions& opts) : layers_(opts.octave_layers) {
    if (img.width() < 32 || img.height() < 32) {
      throw Error(ErrorKind::ImageTooSmall, "keypoint detection needs at least 32x32 pixels");
    }
    if (opts.octave_layers < 1 || !(opts.sigma > opts.input_blur)) {
      throw Error(ErrorKind::InvalidArgument, "invalid SIFT options");
    }
    Plane base(img.width(), img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) base.v[i] = static_cast<float>(src[i]) / 255.0f;
    base = gaussian_blur(base, std::sqrt(opts.sigma * opts.sigma - opts.input_blur * opts.input_blur));

    const int min_dim = std::min(img.width(), img.height());
    octaves_ = std::max(1, static_cast<int>(std::floor(std::log2(min_dim))) - 3);

    // Incremental blur taking layer i-1 to absolute sigma0 * k^i.
    const int per_octave = layers_ + 3;
    std::vector<double> increments(static_cast<std::size_t>(per_octave), 0.0);
    const double k = std::pow(2.0, 1.0 / layers_);
    for (int i = 1; i < per_octave; ++i) {
      const double prev = opts.sigma * std::pow(k, i - 1);
      const double total = prev * k;
      increments[static_cast<std::size_t>(i)] = std::sqrt(total * total - prev * prev);
    }

    gauss_.reserve(static_cast<std::size_t>(octaves_ * per_octave));
    dog_.reserve(static_cast<std::size_t>(octaves_ * (per_octave - 1)));
    for (int o = 0; o < octaves_; ++o) {
      if (o == 0) {
        gauss_.push_back(std::move(base));
      } else {
        gauss_.push_back(downsample(gauss(o - 1, layers_)));
      }
      for (int i = 1; i < per_octave; ++i) {
        gauss_.push_back(gaussian_blur(gauss(o, i - 1), increments[static_cast<std::size_t>(i)]));
      }
      for (int i = 0; i + 1 < per_octave; ++i) {
        const Plane& a = gauss(o, i);
        const Plane& b = gauss(o, i + 1);
        Plane d(a.w, a.h);
        for (std::size_t p = 0; p < d.v.size(); ++p) d.v[p] = b.v[p] - a.v[p];
        dog_.push_back(std::move(d));
      }
    }
  }

  int octaves() const { return octaves_; }
  int layers() const { return layers_; }
  const Plane& gauss(int o, int i) const {
    return gauss_[static_cast<std::size_t>(o * (layers_ + 3) + i)];
  }
  const Plane& dog(int o, int i) const {
    return dog_[static_cast<std::size_t>(o * (layers_ + 2) + i)];
  }

 private:
  int layers_;
  int octaves_ = 0;
  std::vector<Plane> gauss_;
  std::vector<Plane> dog_;
};

bool is_extremum(const ScaleSpace& ss, int o, int i, int x, int y, float val) {
  const bool want_max = val > 0.0f;
  for (int di = -1; di <= 1; ++di) {
    const Plane& d = ss.dog(o, i + di);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (di == 0 && dy == 0 && dx == 0) continue;
        const float n = d(x + dx, y + dy);
        if (want_max ? n > val : n < val) return false;
      }
    }
  }
  return true;
}

struct Refined {
  int x;
  int y;
  int layer;
  double xc;
  double yc;
  double xs;
  double contrast;
};

std::optional<Refined> refine(const ScaleSpace& ss, const SiftOptions& opts, int o, int layer,
                              int x, int y) {
  const int s = ss.layers();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  int step = 0;
  for (; step < kMaxRefineSteps; ++step) {
    const Plane& img = ss.dog(o, layer);
    const Plane& prev = ss.dog(o, layer - 1);
    const Plane& next = ss.dog(o, layer + 1);
    const double v2 = 2.0 * img(x, y);
    grad = {0.5 * (img(x + 1, y) - img(x - 1, y)), 0.5 * (img(x, y + 1) - img(x, y - 1)),
            0.5 * (next(x, y) - prev(x, y))};
    const double dxx = img(x + 1, y) + img(x - 1, y) - v2;
    const double dyy = img(x, y + 1) + img(x, y - 1) - v2;
    const double dss = next(x, y) + prev(x, y) - v2;
    const double dxy =
        0.25 * (img(x + 1, y + 1) - img(x - 1, y + 1) - img(x + 1, y - 1) + img(x - 1, y - 1));
    const double dxs = 0.25 * (next(x + 1, y) - next(x - 1, y) - prev(x + 1, y) + prev(x - 1, y));
    const double dys = 0.25 * (next(x, y + 1) - next(x, y - 1) - prev(x, y + 1) + prev(x, y - 1));
    Eigen::Matrix3d hess;
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    if (std::abs(hess.determinant()) < 1e-18) return std::nullopt;
    offset = -hess.partialPivLu().solve(grad);
    if (offset.cwiseAbs().maxCoeff() < 0.5) break;
    if (offset.cwiseAbs().maxCoeff() > 1e6) return std::nullopt;
    x += static_cast<int>(std::lround(offset[0]));
    y += static_cast<int>(std::lround(offset[1]));
    layer += static_cast<int>(std::lround(offset[2]));
    const Plane& d = ss.dog(o, 0);
    if (layer < 1 || layer > s || x < kBorder || x >= d.w - kBorder || y < kBorder ||
        y >= d.h - kBorder) {
      return std::nullopt;
    }
  }
  if (step >= kMaxRefineSteps) return std::nullopt;

  const Plane& img = ss.dog(o, layer);
  const double contrast = img(x, y) + 0.5 * grad.dot(offset);
  if (std::abs(contrast) * s < opts.contrast_threshold) return std::nullopt;

  const double v2 = 2.0 * img(x, y);
  const double dxx = img(x + 1, y) + img(x - 1, y) - v2;
  const double dyy = img(x, y + 1) + img(x, y - 1) - v2;
  const double dxy =
      0.25 * (img(x + 1, y + 1) - img(x - 1, y + 1) - img(x + 1, y - 1) + img(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = opts.edge_threshold;
  if (det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det) return std::nullopt;

  return Refined{x, y, layer, offset[0], offset[1], offset[2], contrast};
}

std::array<double, kOriBins> orientation_histogram(const Plane& g, int px, int py, double sigma_oct) {
  std::array<double, kOriBins> raw{};
  const int radius = static_cast<int>(std::lround(kOriRadiusFactor * sigma_oct));
  const double sigma_w = kOriSigmaFactor * sigma_oct;
  const double exp_scale = -1.0 / (2.0 * sigma_w * sigma_w);
  for (int i = -radius; i <= radius; ++i) {
    const int y = py + i;
    if (y <= 0 || y >= g.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = px + j;
      if (x <= 0 || x >= g.w - 1) continue;
      const double dx = g(x + 1, y) - g(x - 1, y);
      const double dy = g(x, y + 1) - g(x, y - 1);
      double ang = std::atan2(dy, dx);
      if (ang < 0.0) ang += kTwoPi;
      const double w = std::exp((i * i + j * j) * exp_scale);
      int bin = static_cast<int>(std::lround(ang * kOriBins / kTwoPi));
      bin = ((bin % kOriBins) + kOriBins) % kOriBins;
      raw[static_cast<std::size_t>(bin)] += w * std::hypot(dx, dy);
    }
  }
  std::array<double, kOriBins> smooth{};
  for (int i = 0; i < kOriBins; ++i) {
    const auto at = [&](int k) { return raw[static_cast<std::size_t>((k + kOriBins) % kOriBins)]; };
    smooth[static_cast<std::size_t>(i)] =
        (at(i - 2) + at(i + 2)) / 16.0 + (at(i - 1) + at(i + 1)) * 4.0 / 16.0 + at(i) * 6.0 / 16.0;
  }
  return smooth;
}

double octave_sigma(const SiftOptions& opts, double layer) {
  return opts.sigma * std::pow(2.0, layer / opts.octave_layers);
}

std::vector<Keypoint> detect(const ScaleSpace& ss, const SiftOptions& opts, std::size_t max_count) {
  std::vector<Keypoint> kps;
  const int s = ss.layers();
  const float threshold = static_cast<float>(0.5 * opts.contrast_threshold / s);
  for (int o = 0; o < ss.octaves(); ++o) {
    const double octave_scale = std::ldexp(1.0, o);
    for (int i = 1; i <= s; ++i) {
      const Plane& d = ss.dog(o, i);
      for (int y = kBorder; y < d.h - kBorder; ++y) {
        for (int x = kBorder; x < d.w - kBorder; ++x) {
          const float val = d(x, y);
          if (std::abs(val) <= threshold || !is_extremum(ss, o, i, x, y, val)) continue;
          const auto r = refine(ss, opts, o, i, x, y);
          if (!r) continue;
          const double sigma_oct = octave_sigma(opts, r->layer + r->xs);
          const auto hist = orientation_histogram(ss.gauss(o, r->layer), r->x, r->y, sigma_oct);
          const double peak = *std::max_element(hist.begin(), hist.end());
          for (int b = 0; b < kOriBins; ++b) {
            const double l = hist[static_cast<std::size_t>((b - 1 + kOriBins) % kOriBins)];
            const double c = hist[static_cast<std::size_t>(b)];
            const double rr = hist[static_cast<std::size_t>((b + 1) % kOriBins)];
            if (!(c > l && c > rr && c >= kOriPeakRatio * peak)) continue;
            double bin = b + 0.5 * (l - rr) / (l - 2.0 * c + rr);
            if (bin < 0.0) bin += kOriBins;
            if (bin >= kOriBins) bin -= kOriBins;
            double ori = bin * kTwoPi / kOriBins;
            if (ori >= kTwoPi) ori = 0.0;
            Keypoint kp;
            kp.x = (r->x + r->xc) * octave_scale + 0.5;
            kp.y = (r->y + r->yc) * octave_scale + 0.5;
            kp.scale = sigma_oct * octave_scale;
            kp.orientation = ori;
            kp.response = std::abs(r->contrast);
            kp.octave = o;
            kp.layer = r->layer;
            kps.push_back(kp);
          }
        }
      }
    }
  }
  std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(b.response, a.y, a.x, a.scale, a.orientation) <
           std::tie(a.response, b.y, b.x, b.scale, b.orientation);
  });
  if (kps.size() > max_count) kps.resize(max_count);
  return kps;
}

Descriptor describe(const ScaleSpace& ss, const SiftOptions& opts, const Keypoint& kp) {
  const int o = std::clamp(kp.octave, 0, ss.octaves() - 1);
  const int layer = std::clamp(kp.layer, 1, ss.layers());
  const Plane& g = ss.gauss(o, layer);
  const double octave_scale = std::ldexp(1.0, o);
  const int px = static_cast<int>(std::lround((kp.x - 0.5) / octave_scale));
  const int py = static_cast<int>(std::lround((kp.y - 0.5) / octave_scale));
  const double sigma_oct = kp.scale / octave_scale;
  (void)opts;

  constexpr int d = kDescCells;
  constexpr int n = kDescBins;
  const double hist_width = kDescCellScale * sigma_oct;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::hypot(g.w, g.h)));
  const double cos_t = std::cos(kp.orientation) / hist_width;
  const double sin_t = std::sin(kp.orientation) / hist_width;
  const double exp_scale = -1.0 / (d * d * 0.5);

  std::vector<double> hist(static_cast<std::size_t>((d + 2) * (d + 2) * (n + 2)), 0.0);
  const auto cell = [&](int r, int c, int b) -> double& {
    return hist[static_cast<std::size_t>(((r + 1) * (d + 2) + (c + 1)) * (n + 2) + b)];
  };
  for (int i = -radius; i <= radius; ++i) {
    const int y = py + i;
    if (y <= 0 || y >= g.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = px + j;
      if (x <= 0 || x >= g.w - 1) continue;
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (!(rbin > -1.0 && rbin < d && cbin > -1.0 && cbin < d)) continue;
      const double dx = g(x + 1, y) - g(x - 1, y);
      const double dy = g(x, y + 1) - g(x, y - 1);
      const double mag = std::hypot(dx, dy);
      if (mag == 0.0) continue;
      double rel = std::atan2(dy, dx) - kp.orientation;
      rel -= kTwoPi * std::floor(rel / kTwoPi);
      const double obin = rel * n / kTwoPi;
      const double v = mag * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0;
      const double fc = cbin - c0;
      const double fo = obin - o0;
      o0 = ((o0 % n) + n) % n;
      for (int a = 0; a <= 1; ++a) {
        const double wr = a ? fr : 1.0 - fr;
        for (int b = 0; b <= 1; ++b) {
          const double wc = b ? fc : 1.0 - fc;
          cell(r0 + a, c0 + b, o0) += v * wr * wc * (1.0 - fo);
          cell(r0 + a, c0 + b, o0 + 1) += v * wr * wc * fo;
        }
      }
    }
  }

  Descriptor out;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      cell(r, c, 0) += cell(r, c, n);
      cell(r, c, 1) += cell(r, c, n + 1);
      for (int b = 0; b < n; ++b) {
        out.values[static_cast<std::size_t>((r * d + c) * n + b)] = static_cast<float>(cell(r, c, b));
      }
    }
  }
  double norm2 = 0.0;
  for (float v : out.values) norm2 += static_cast<double>(v) * v;
  if (norm2 <= 0.0) return Descriptor{};
  const float limit = static_cast<float>(std::sqrt(norm2)) * kDescClamp;
  norm2 = 0.0;
  for (float& v : out.values) {
    v = std::min(v, limit);
    norm2 += static_cast<double>(v) * v;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
  for (float& v : out.values) v *= inv;
  return out;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const ImageGray& img, std::size_t max_count,
                                       const SiftOptions& opts) {
  const ScaleSpace ss(img, opts);
  return detect(ss, opts, max_count);
}

std::vector<Descriptor> compute_descriptors(const ImageGray& img, std::span<const Keypoint> kps,
                                            const SiftOptions& opts) {
  const ScaleSpace ss(img, opts);
  std::vector<Descriptor> out;
  out.reserve(kps.size());
  for (const auto& kp : kps) out.push_back(describe(ss, opts, kp));
  return out;
}

SiftFeatures extract_features(const ImageGray& img, std::size_t max_count,
                              const SiftOptions& opts) {
  const ScaleSpace ss(img, opts);
  SiftFeatures f;
  f.keypoints = detect(ss, opts, max_count);
  f.descriptors.reserve(f.keypoints.size());
  for (const auto& kp : f.keypoints) f.descriptors.push_back(describe(ss, opts, kp));
  return f;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) noexcept {
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const float diff = a.values[i] - b.values[i];
    acc += diff * diff;
  }
  return std::sqrt(static_cast<double>(acc));
}

}  // namespace skintrial
