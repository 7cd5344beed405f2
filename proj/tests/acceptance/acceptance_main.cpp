// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: skintrial_acceptance <path-to-skintrial-cli> [work-dir]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skintrial/alignment.hpp"
#include "skintrial/card_calibration.hpp"
#include "skintrial/colour.hpp"
#include "skintrial/error.hpp"
#include "skintrial/fixture.hpp"
#include "skintrial/manifest.hpp"
#include "skintrial/metrics.hpp"
#include "skintrial/normalization.hpp"
#include "skintrial/roi.hpp"
#include "skintrial/sift.hpp"
#include "skintrial/stats.hpp"

namespace fs = std::filesystem;
using namespace skintrial;
using Clock = std::chrono::steady_clock;

namespace {

// Collects the sub-checks of one criterion; the first failure is reported.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool ok() const { return failure_.empty(); }
  std::string detail() const {
    if (!ok()) return failure_;
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

 private:
  std::string failure_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

int run_cli(const fs::path& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + cli.string() + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return files;
}

std::vector<double> series_values(const fs::path& csv) {
  std::vector<double> v;
  const auto rows = lines_of(slurp(csv));
  for (std::size_t i = 1; i < rows.size(); ++i) v.push_back(std::stod(rows[i].substr(rows[i].find(',') + 1)));
  return v;
}

double slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  const double mx = (n - 1) / 2.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (static_cast<double>(i) - mx) * (y[i] - my);
    sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
  }
  return sxy / sxx;
}

double range_of(const std::vector<double>& y) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return *hi - *lo;
}

// ---------------------------------------------------------------------------

Check colour_round_trips() {
  Check c;
  const auto t0 = Clock::now();
  int lab_err = 0, yuv_err = 0;
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      for (int k = 0; k < 32; ++k) {
        const auto v = [](int s) { return static_cast<std::uint8_t>(std::lround(s * 255.0 / 31.0)); };
        const Rgb in{v(i), v(j), v(k)};
        const Rgb lab = lab_to_rgb(rgb_to_lab(in));
        const Rgb yuv = yuv_to_rgb(rgb_to_yuv(in));
        const auto err = [&](Rgb o) {
          return std::max({std::abs(o.r - in.r), std::abs(o.g - in.g), std::abs(o.b - in.b)});
        };
        lab_err = std::max(lab_err, err(lab));
        yuv_err = std::max(yuv_err, err(yuv));
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(lab_err <= 1, "rgb->lab->rgb error " + std::to_string(lab_err));
  c.expect(yuv_err <= 2, "rgb->yuv->rgb error " + std::to_string(yuv_err));
  c.expect(secs < 10.0, "took " + fmt("%.2f s", secs));
  c.note("lab max err " + std::to_string(lab_err) + ", yuv max err " + std::to_string(yuv_err) + ", " +
         fmt("%.3f s", secs));
  return c;
}

Check normalization_properties() {
  Check c;
  int worst_idem = 0;
  bool monotone = true;
  bool clahe_global = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(90.0 + 5.0 * static_cast<double>(seed), 25.0);
    ImageGray img(61, 47);
    for (auto& p : img.data()) p = static_cast<std::uint8_t>(std::clamp(std::lround(d(rng)), 0L, 255L));
    const ImageGray eq = histogram_equalize_gray(img);
    const ImageGray eq2 = histogram_equalize_gray(eq);
    for (std::size_t i = 0; i < eq.data().size(); ++i) {
      worst_idem = std::max(worst_idem, std::abs(eq2.data()[i] - eq.data()[i]));
      for (std::size_t j = 0; j < eq.data().size(); j += 37) {
        if (img.data()[i] < img.data()[j] && eq.data()[i] > eq.data()[j]) monotone = false;
      }
    }
    const int n = static_cast<int>(img.pixel_count());
    if (!(clahe_gray(img, {1, 1, n}) == eq)) clahe_global = false;
  }
  c.expect(worst_idem <= 1, "equalization not idempotent: " + std::to_string(worst_idem));
  c.expect(monotone, "equalization remap not monotone");
  c.expect(clahe_global, "CLAHE 1x1 unclipped differs from global equalization");

  const CardLayout layout = fixture::synthetic_card_layout();
  const LabColour& ref = layout.reference_at(layout.key_patch);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double L = 62 + 5 * u(rng);
    const double a = 14 + 3 * u(rng);
    const double b = 19 + 4 * u(rng);
    const std::uint64_t pattern_seed = rng();
    const std::uint64_t noise_seed = rng();
    ImageRGB img = fixture::render_skin(160, 160, {L, a, b}, pattern_seed, noise_seed);
    const double angle = 0.03 * u(rng);
    const CardAnnotation ann = fixture::card_quad({19.2, 96.0}, 115.2, 48.0, angle);
    fixture::paint_card(img, ann, layout);
    const double cl = 4 * u(rng);
    const double ca = 6 * u(rng);
    const double cb = 6 * u(rng);
    const ImageRGB cast = fixture::apply_cast(img, {cl, ca, cb});
    const ImageRGB out = normalize_by_card(cast, ann, layout);
    const LabColour m = measure_patch(out, locate_patch_region(ann, layout, layout.key_patch));
    worst = std::max({worst, std::abs(m.L - ref.L), std::abs(m.a - ref.a), std::abs(m.b - ref.b)});
  }
  c.expect(worst <= 1.5, "card fixed point off by " + fmt("%.3f", worst));
  c.note("idempotence max " + std::to_string(worst_idem) + ", CLAHE 1x1 exact, card key patch max err " +
         fmt("%.3f", worst) + " over 20 casts");
  return c;
}

Check alignment_recovery() {
  Check c;
  // Self-match on a rendered temple scene.
  const auto scene = fixture::make_temple_scene(512, 3);
  const ImageGray img = to_grayscale(fixture::render_temple(scene, 10, Affine2::identity(), 1));
  const SiftFeatures f = extract_features(img, 1000);
  const auto matches = match_knn(f.descriptors, f.descriptors, 0.75);
  const AlignTransform self = estimate_transform(matches, f.keypoints, f.keypoints, TransformKind::Similarity, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) worst = std::max(worst, std::abs(self.matrix.m[i] - Affine2::identity().m[i]));
  c.expect(worst <= 1e-3, "self-match coefficient off by " + fmt("%.2e", worst));

  constexpr double kDeg = std::numbers::pi / 180.0;
  const Affine2 truth = Affine2::similarity(1.1, 15 * kDeg, {250, 250}, 7, -4);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<Point2> src, dst;
    for (int i = 0; i < 100; ++i) {
      const Point2 p{u(rng), u(rng)};
      src.push_back(p);
      if (i < 30) {
        const double x = u(rng);
        const double y = u(rng);
        dst.push_back({x, y});
      } else {
        const Point2 q = truth.apply(p);
        const double nx = noise(rng);
        const double ny = noise(rng);
        dst.push_back({q.x + nx, q.y + ny});
      }
    }
    try {
      const AlignTransform t = estimate_transform(src, dst, TransformKind::Similarity, seed);
      ok += std::abs(t.rotation() - 15 * kDeg) <= 0.5 * kDeg && std::abs(t.scale() / 1.1 - 1.0) <= 0.01;
    } catch (const Error&) {
    }
  }
  c.expect(ok >= 95, "recovered " + std::to_string(ok) + "/100");
  c.note("self-match max coefficient err " + fmt("%.1e", worst) + ", " + std::to_string(f.keypoints.size()) +
         " keypoints; 15 deg x1.1 recovered " + std::to_string(ok) + "/100");
  return c;
}

Check wrinkle_metrics() {
  Check c;
  c.expect(wrinkle_ratio(ImageGray(32, 32, 140)).wrinkle_ratio == 0.0, "constant image W_G != 0");

  auto scene = fixture::make_temple_scene(256, 31, 16);
  scene.blobs.clear();
  double prev = -1.0;
  std::string ladder;
  bool increasing = true;
  for (std::size_t lines : {0u, 4u, 8u, 12u, 16u}) {
    const ImageGray img = to_grayscale(fixture::render_temple(scene, lines, Affine2::identity(), 5));
    const double w = wrinkle_over_roi(img, fixture::temple_roi(256)).wrinkle_ratio;
    increasing = increasing && w > prev;
    prev = w;
    ladder += (ladder.empty() ? "" : " < ") + fmt("%.4f", w);
  }
  c.expect(increasing, "ladder not strictly increasing: " + ladder);

  ImageGray step(4, 5);
  for (int y = 0; y < 5; ++y) {
    step(2, y) = 255;
    step(3, y) = 255;
  }
  const ImageGray gx = sobel_x(step);
  bool saturates = true;
  for (int y = 0; y < 5; ++y) saturates = saturates && gx(0, y) == 0 && gx(1, y) == 255 && gx(2, y) == 255 && gx(3, y) == 0;
  c.expect(saturates, "vertical step |Gx| does not saturate to 255");

  ImageGray ramp(8, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) ramp(x, y) = static_cast<std::uint8_t>(10 + 3 * x + 2 * y);
  }
  const ImageGray lap = laplacian_magnitude(ramp);
  bool flat = true;
  for (int y = 1; y < 5; ++y) {
    for (int x = 1; x < 7; ++x) flat = flat && lap(x, y) == 0;
  }
  c.expect(flat, "ramp Laplacian interior is not 0");
  c.note("ladder " + ladder);
  return c;
}

PairedSamples from_differences(const std::vector<double>& d) {
  PairedSamples s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    s.baseline.push_back(10.0 + static_cast<double>(i));
    s.final.push_back(s.baseline.back() + d[i]);
  }
  return s;
}

double brute_force_wilcoxon(std::vector<double> d) {
  d.erase(std::remove(d.begin(), d.end(), 0.0), d.end());
  const std::size_t n = d.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = static_cast<double>(i + j + 2) / 2.0;
    i = j + 1;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += d[i] > 0 ? rank[i] : 0.0;
  long le = 0, ge = 0;
  for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += (mask >> i) & 1 ? rank[i] : 0.0;
    le += w <= observed + 1e-9;
    ge += w >= observed - 1e-9;
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

Check statistics_oracles() {
  Check c;
  const TestResult t = paired_t_test(from_differences({1, 2, 3}));
  c.expect(std::abs(t.statistic - 3.4641) <= 1e-3, "paired t = " + fmt("%.6f", t.statistic));
  c.expect(std::abs(t.p_value - 0.0742) <= 1e-3, "paired t p = " + fmt("%.6f", t.p_value));

  const TestResult w = wilcoxon_signed_rank(from_differences({1, 2, 3}), 0.05, WilcoxonMethod::Exact);
  c.expect(w.p_value == 0.25, "Wilcoxon exact p = " + fmt("%.6f", w.p_value));
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pick(-6, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 10;
    std::vector<double> d;
    for (int i = 0; i < n; ++i) d.push_back(trial % 2 ? pick(rng) : pick(rng) + 0.01 * i);
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = 1.0;
    const TestResult r = wilcoxon_signed_rank(from_differences(d), 0.05, WilcoxonMethod::Exact);
    worst = std::max(worst, std::abs(r.p_value - brute_force_wilcoxon(d)));
  }
  c.expect(worst <= 1e-12, "Wilcoxon exact vs enumeration off by " + fmt("%.2e", worst));

  const ShapiroWilk three = shapiro_wilk(std::vector<double>{-1, 0, 1});
  c.expect(std::abs(three.w - 1.0) <= 1e-12, "Shapiro-Wilk W on {-1,0,1} = " + fmt("%.9f", three.w));
  const std::vector<double> cert{0.139, 0.157, 0.175, 0.256, 0.344, 0.413, 0.503, 0.577, 0.614,
                                 0.655, 0.954, 1.392, 1.557, 1.648, 1.690, 1.994, 2.174, 2.206,
                                 3.245, 3.510, 3.571, 4.354, 4.980, 6.084, 8.351};
  const ShapiroWilk sw = shapiro_wilk(cert);
  c.expect(std::abs(sw.w - 0.83467) <= 1e-3 && std::abs(sw.p - 0.000914) <= 1e-3,
           "Shapiro-Wilk reference W " + fmt("%.6f", sw.w) + " p " + fmt("%.6f", sw.p));

  std::vector<double> z{-1.5, -1.0, -0.7, -0.4, -0.2, 0.0, 0.1, 0.3, 0.5, 0.8, 1.0, 1.6};
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / 12.0;
  double ss = 0.0;
  for (double v : z) ss += (v - m) * (v - m);
  for (double& v : z) v = (v - m) / std::sqrt(ss / 11.0);
  const auto with_t = [&](double tq) {
    std::vector<double> d = z;
    for (double& v : d) v += tq / std::sqrt(12.0);
    return paired_compare(from_differences(d), 0.05);
  };
  const TestResult sig = with_t(3.10580651553928);
  const TestResult ns = with_t(2.032173724516766);
  c.expect(std::abs(sig.p_value - 0.010) <= 1e-6 && sig.significant, "p = 0.010 not significant");
  c.expect(std::abs(ns.p_value - 0.067) <= 1e-6 && !ns.significant, "p = 0.067 significant");
  c.note("t " + fmt("%.4f", t.statistic) + " p " + fmt("%.4f", t.p_value) + "; Wilcoxon p " + fmt("%.2f", w.p_value) +
         "; SW W " + fmt("%.5f", sw.w) + "; decisions 0.010 sig, 0.067 not sig");
  return c;
}

struct TrialRun {
  fs::path data;
  fs::path out1;
  fs::path out2;
  int exit1 = -1;
  int exit2 = -1;
  double secs = 0.0;
};

Check end_to_end(const fs::path& cli, const fs::path& work, TrialRun& tr) {
  Check c;
  tr.data = work / "trial";
  tr.out1 = work / "out1";
  tr.out2 = work / "out2";
  const int gen = run_cli(cli, "gen-fixture --out '" + tr.data.string() + "' --volunteers 12 --sessions 10 --size 512",
                          work / "gen.log");
  c.expect(gen == 0, "gen-fixture exit " + std::to_string(gen));
  if (gen != 0) return c;

  auto t0 = Clock::now();
  tr.exit1 = run_cli(cli, "run '" + (tr.data / "manifest.json").string() + "' --out '" + tr.out1.string() + "'",
                     work / "run1.log");
  tr.secs = seconds_since(t0);
  tr.exit2 = run_cli(cli, "run '" + (tr.data / "manifest.json").string() + "' --out '" + tr.out2.string() + "'",
                     work / "run2.log");
  c.expect(tr.exit1 == 0 && tr.exit2 == 0, "run exit " + std::to_string(tr.exit1) + "/" + std::to_string(tr.exit2));
  if (tr.exit1 != 0) return c;
  c.expect(tr.secs < 60.0, "run took " + fmt("%.1f s", tr.secs));

  const auto a = read_tree(tr.out1);
  const auto b = read_tree(tr.out2);
  c.expect(a == b, "outputs differ between two runs");

  const auto truth = nlohmann::json::parse(slurp(tr.data / "truth.json"));
  int drifted = 0, detected = 0, controls = 0, flat = 0;
  double worst_b = 0.0, worst_w = 0.0;
  for (const auto& v : truth["volunteers"]) {
    const std::string id = v["id"];
    const auto bs = series_values(tr.out1 / "series" / (id + "_b_card.csv"));
    const auto ws = series_values(tr.out1 / "series" / (id + "_wrinkle_ratio.csv"));
    if (v["drifted"].get<bool>()) {
      ++drifted;
      detected += slope(bs) < 0 && slope(ws) < 0;
    } else {
      ++controls;
      const double mean_w = std::accumulate(ws.begin(), ws.end(), 0.0) / static_cast<double>(ws.size());
      worst_b = std::max(worst_b, range_of(bs));
      worst_w = std::max(worst_w, range_of(ws) / mean_w);
      flat += range_of(bs) <= 1.5 && range_of(ws) <= 0.10 * mean_w;
    }
  }
  c.expect(drifted == 6 && detected == drifted,
           "drift direction found for " + std::to_string(detected) + "/" + std::to_string(drifted));
  c.expect(controls == 6 && flat == controls, "flat control series " + std::to_string(flat) + "/" + std::to_string(controls));

  bool significant = false;
  std::string p_text = "missing";
  for (const auto& line : lines_of(a.at("summary.csv"))) {
    if (line.rfind("Smartphone colour (b) [card],", 0) == 0) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      significant = cells.size() > 3 && cells[2] == "true";
      p_text = cells.size() > 3 ? cells[3] : "?";
    }
  }
  c.expect(significant, "smartphone b (card) not significant, p " + p_text);
  c.note("run " + fmt("%.1f s", tr.secs) + ", drift found " + std::to_string(detected) + "/6, controls b range <= " +
         fmt("%.2f", worst_b) + " and wrinkle range <= " + fmt("%.1f%%", 100 * worst_w) + ", card b p " + p_text +
         ", " + std::to_string(a.size()) + " files byte-identical");
  return c;
}

Check fault_tolerance(const fs::path& cli, const fs::path& work, const TrialRun& tr) {
  Check c;
  if (tr.exit1 != 0) {
    c.expect(false, "end-to-end run did not produce a baseline");
    return c;
  }
  const fs::path data = work / "trial_corrupt";
  const fs::path out = work / "out_corrupt";
  fs::copy(tr.data, data, fs::copy_options::recursive);

  const Manifest m = load_manifest(data / "manifest.json");
  const VolunteerRecord& v = m.volunteers[2];
  std::vector<const SessionRecord*> cheeks;
  for (const auto& s : v.sessions) {
    if (s.device == Device::Smartphone && s.site == Site::Cheek) cheeks.push_back(&s);
  }
  const SessionRecord& victim = *cheeks[cheeks.size() / 2];
  std::ofstream(victim.image_path, std::ios::binary | std::ios::trunc) << "\x89PNG\r\n\x1a\n truncated";

  const int code = run_cli(cli, "run '" + (data / "manifest.json").string() + "' --out '" + out.string() + "'",
                           work / "run_corrupt.log");
  c.expect(code == 0, "exit " + std::to_string(code));
  if (code != 0) return c;

  const auto before = read_tree(tr.out1);
  const auto after = read_tree(out);
  const auto skipped = lines_of(after.at("skipped.csv"));
  c.expect(skipped.size() == 2, "skipped.csv has " + std::to_string(skipped.size() - 1) + " records");
  if (skipped.size() == 2) {
    c.expect(skipped[1].rfind(v.id + "," + victim.date.iso() + ",cheek,", 0) == 0, "wrong record: " + skipped[1]);
  }

  // Files touched by the missing session lose exactly that session's rows; everything else is identical.
  const std::string date = victim.date.iso();
  const auto without = [&](const std::string& text, const std::string& prefix) {
    std::string out_text;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
      if (line.rfind(prefix, 0) != 0) out_text += line + "\n";
    }
    return out_text;
  };
  std::size_t identical = 0;
  c.expect(before.size() == after.size(), "file count changed");
  for (const auto& [path, text] : before) {
    const auto it = after.find(path);
    if (it == after.end()) {
      c.expect(false, "missing " + path);
      continue;
    }
    if (path == "skipped.csv" || path == "plots/" + v.id + "_colour.svg") continue;
    if (path == "colour.csv") {
      c.expect(it->second == without(text, v.id + "," + date + ","), "colour.csv changed beyond the skipped rows");
    } else if (path.rfind("series/" + v.id + "_", 0) == 0 && path.find("wrinkle") == std::string::npos) {
      c.expect(it->second == without(text, date + ","), path + " changed beyond the skipped row");
    } else {
      c.expect(it->second == text, path + " changed");
      ++identical;
    }
  }
  c.note("skipped " + v.id + " " + date + " cheek, " + std::to_string(identical) + " unaffected files identical");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <skintrial-cli> [work-dir]\n", argv[0]);
    return 2;
  }
  const fs::path cli = fs::absolute(argv[1]);
  const fs::path work = argc > 2 ? fs::path(argv[2])
                                  : fs::temp_directory_path() / ("skintrial_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  int failed = 0;
  const auto report = [&](int n, const char* name, const std::function<Check()>& body) {
    Check c;
    const auto t0 = Clock::now();
    try {
      c = body();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok();
    std::printf("criterion %d %-26s %s  (%s) [%.1f s]\n", n, name, c.ok() ? "PASS" : "FAIL", c.detail().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  TrialRun tr;
  report(1, "colour round trips", colour_round_trips);
  report(2, "normalization properties", normalization_properties);
  report(3, "alignment", alignment_recovery);
  report(4, "wrinkle metrics", wrinkle_metrics);
  report(5, "statistics oracles", statistics_oracles);
  report(6, "end-to-end synthetic trial", [&] { return end_to_end(cli, work, tr); });
  report(7, "fault tolerance", [&] { return fault_tolerance(cli, work, tr); });

  if (argc <= 2 && failed == 0) fs::remove_all(work);
  std::printf("%d of 7 criteria passed\n", 7 - failed);
  return failed == 0 ? 0 : 1;
}
