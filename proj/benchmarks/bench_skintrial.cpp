#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skintrial/alignment.hpp"
#include "skintrial/card_calibration.hpp"
#include "skintrial/colour.hpp"
#include "skintrial/fixture.hpp"
#include "skintrial/metrics.hpp"
#include "skintrial/normalization.hpp"
#include "skintrial/sift.hpp"
#include "skintrial/stats.hpp"

using namespace skintrial;

namespace {

ImageRGB temple(int size, double angle = 0.0) {
  static const auto scene = fixture::make_temple_scene(size, 9);
  const double c = size / 2.0;
  return fixture::render_temple(scene, 10, Affine2::similarity(1.0, angle, {c, c}), 3);
}

ImageRGB skin(int size) {
  return fixture::render_skin(size, size, {62, 14, 19}, 1, 2);
}

}  // namespace

static void BM_RgbToLab(benchmark::State& state) {
  const ImageRGB img = skin(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    double sum = 0.0;
    const auto d = img.data();
    for (std::size_t i = 0; i < d.size(); i += 3) sum += rgb_to_lab({d[i], d[i + 1], d[i + 2]}).L;
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(img.pixel_count()));
}
BENCHMARK(BM_RgbToLab)->Arg(512);

static void BM_HistogramEqualize(benchmark::State& state) {
  const ImageRGB img = skin(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(histogram_equalize_y(img));
}
BENCHMARK(BM_HistogramEqualize)->Arg(512);

static void BM_Clahe(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ImageRGB img = skin(n);
  const ClaheConfig cfg = make_clahe_config(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(clahe_y(img, cfg));
}
BENCHMARK(BM_Clahe)->Arg(256)->Arg(512);

static void BM_CardNormalize(benchmark::State& state) {
  const CardLayout layout = fixture::synthetic_card_layout();
  ImageRGB img = skin(512);
  const CardAnnotation ann = fixture::card_quad({60, 310}, 370, 155, 0.01);
  fixture::paint_card(img, ann, layout);
  for (auto _ : state) benchmark::DoNotOptimize(normalize_by_card(img, ann, layout));
}
BENCHMARK(BM_CardNormalize);

static void BM_SiftExtract(benchmark::State& state) {
  const ImageGray img = to_grayscale(temple(static_cast<int>(state.range(0))));
  std::size_t kps = 0;
  for (auto _ : state) {
    const SiftFeatures f = extract_features(img, 1000);
    kps = f.keypoints.size();
  }
  state.counters["keypoints"] = static_cast<double>(kps);
}
BENCHMARK(BM_SiftExtract)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_MatchAndEstimate(benchmark::State& state) {
  const SiftFeatures a = extract_features(to_grayscale(temple(512)), 1000);
  const SiftFeatures b = extract_features(to_grayscale(temple(512, 0.08)), 1000);
  for (auto _ : state) {
    const auto m = match_knn(a.descriptors, b.descriptors, 0.75);
    benchmark::DoNotOptimize(estimate_transform(m, a.keypoints, b.keypoints, TransformKind::Similarity, 1));
  }
}
BENCHMARK(BM_MatchAndEstimate)->Unit(benchmark::kMillisecond);

static void BM_WrinkleRatio(benchmark::State& state) {
  const ImageRGB img = temple(512);
  const Roi roi = fixture::temple_roi(512);
  for (auto _ : state) benchmark::DoNotOptimize(wrinkle_for_session(img, roi, AlignTransform::identity()));
}
BENCHMARK(BM_WrinkleRatio);

static void BM_WilcoxonExact(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d(0.3, 1.0);
  PairedSamples s;
  for (int i = 0; i < state.range(0); ++i) {
    s.baseline.push_back(10.0);
    s.final.push_back(10.0 + d(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_signed_rank(s, 0.05, WilcoxonMethod::Exact));
}
BENCHMARK(BM_WilcoxonExact)->Arg(12)->Arg(25);

static void BM_ShapiroWilk(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (double& v : x) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(shapiro_wilk(x));
}
BENCHMARK(BM_ShapiroWilk)->Arg(12)->Arg(500);

BENCHMARK_MAIN();
