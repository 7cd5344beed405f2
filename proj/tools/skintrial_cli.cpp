#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef SKINTRIAL_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "skintrial/card_calibration.hpp"
#include "skintrial/colour.hpp"
#include "skintrial/error.hpp"
#include "skintrial/fixture.hpp"
#include "skintrial/image_io.hpp"
#include "skintrial/manifest.hpp"
#include "skintrial/metrics.hpp"
#include "skintrial/pipeline.hpp"
#include "skintrial/report.hpp"
#include "skintrial/stats.hpp"

namespace fs = std::filesystem;
using namespace skintrial;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitInvalid = 2;

// Thrown for bad command-line values so they exit like validation failures.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<Point2> parse_points(const std::string& text, const char* what) {
  const auto v = parse_numbers(text, what);
  if (v.size() % 2 != 0) throw UsageError(std::string(what) + ": expected x,y pairs");
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < v.size(); i += 2) pts.push_back({v[i], v[i + 1]});
  return pts;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_validation(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::FileNotFound:
      return true;
    default:
      return false;
  }
}

int cmd_validate(const fs::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  std::size_t sessions = 0;
  for (const auto& v : m.volunteers) sessions += v.sessions.size();
  std::printf("valid: trial '%s', %zu volunteers, %zu session records\n", m.trial_id.c_str(),
              m.volunteers.size(), sessions);
  return kExitOk;
}

struct RunArgs {
  fs::path manifest;
  fs::path out;
  std::string methods;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<unsigned> workers;
  bool keep_intermediates = false;
};

int cmd_run(const RunArgs& a) {
  Manifest m = load_manifest(a.manifest);
  if (!a.methods.empty()) {
    m.config.methods.clear();
    std::stringstream ss(a.methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      const auto method = parse_normalization_method(name);
      if (!method) throw UsageError("--methods: unknown method '" + name + "'");
      m.config.methods.push_back(*method);
    }
  }
  if (a.seed) m.config.seed = *a.seed;
  if (a.alpha) m.config.alpha = *a.alpha;
  if (a.workers) m.config.workers = *a.workers;
  validate(m);

  const auto start = std::chrono::steady_clock::now();
  RunOptions opts;
  if (a.keep_intermediates) opts.intermediates_dir = a.out / "intermediates";
  const ReportBundle bundle = run_pipeline(m, opts);
  const auto csv = emit_csv(bundle, a.out);
  const auto svg = emit_svg_plots(bundle, a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::printf("%-34s %12s %6s %10s  %s\n", "parameter", "% variation", "sig.", "p value", "test");
  for (const auto& r : bundle.summary) {
    std::printf("%-34s %12s %6s %10s  %s\n", r.parameter.c_str(),
                r.percent_variation ? format_real(*r.percent_variation).c_str() : "-",
                r.test ? (r.test->significant ? "yes" : "no") : "-",
                r.test ? format_real(r.test->p_value).c_str() : "-",
                r.test ? std::string(to_string(r.test->test_kind)).c_str() : r.note.c_str());
  }
  for (const auto& s : bundle.skipped) {
    std::fprintf(stderr, "skipped %s %s %s: %s\n", s.volunteer_id.c_str(), s.date.iso().c_str(),
                 std::string(to_string(s.site)).c_str(), s.error.c_str());
  }
  std::fprintf(stderr, "%zu colour samples, %zu wrinkle measurements, %zu skipped sessions; %zu files in %s (%.1f s)\n",
               bundle.colour.size(), bundle.wrinkles.size(), bundle.skipped.size(),
               csv.size() + svg.size(), a.out.string().c_str(), secs);
  return kExitOk;
}

struct NormalizeArgs {
  fs::path image;
  fs::path out;
  fs::path layout;
  std::string method;
  std::string corners;
  int tiles = 4;
  double clip_factor = 40.0;
};

int cmd_normalize(const NormalizeArgs& a) {
  const auto method = parse_normalization_method(a.method);
  if (!method) throw UsageError("--method: expected original, histeq, clahe or card");
  NormalizationContext ctx;
  ctx.clahe = {a.tiles, a.tiles, a.clip_factor};
  std::optional<CardLayout> layout;
  if (*method == NormalizationMethod::ColourCard) {
    if (a.layout.empty()) throw UsageError("--layout is required by the card method");
    layout = load_card_layout(a.layout);
    ctx.card_layout = &*layout;
    if (!a.corners.empty()) {
      const auto pts = parse_points(a.corners, "--card-corners");
      if (pts.size() != 4) throw UsageError("--card-corners: expected 4 corners");
      ctx.card = CardAnnotation{{pts[0], pts[1], pts[2], pts[3]}};
      ctx.card->validate();
    }
  }
  const ImageRGB img = load_image(a.image);
  const ImageRGB out = normalize_image(img, *method, ctx);
  save_image(a.out, out);
  if (ctx.card) {
    const ColourDelta d = card_delta(img, *ctx.card, *layout);
    std::printf("delta L %s a %s b %s\n", format_real(d.dL).c_str(), format_real(d.dA).c_str(),
                format_real(d.dB).c_str());
  }
  std::printf("wrote %s\n", a.out.string().c_str());
  return kExitOk;
}

int cmd_wrinkle(const fs::path& image, const std::string& roi_text) {
  const ImageRGB img = load_image(image);
  WrinkleMetrics w;
  if (roi_text.empty()) {
    w = wrinkle_ratio(to_grayscale(img));
  } else {
    Roi roi(parse_points(roi_text, "--roi"));
    w = wrinkle_for_session(img, roi, AlignTransform::identity());
  }
  std::printf("sobel mean      %s\n", format_real(w.sobel_mean).c_str());
  std::printf("image mean      %s\n", format_real(w.image_mean).c_str());
  std::printf("wrinkle ratio   %s\n", format_real(w.wrinkle_ratio).c_str());
  std::printf("laplacian mean  %s\n", format_real(w.laplacian_mean).c_str());
  std::printf("pixels          %zu\n", w.pixel_count);
  return kExitOk;
}

int cmd_stats(const fs::path& csv_path, double alpha) {
  const auto rows = parse_csv(read_file(csv_path));
  PairedSamples s;
  s.label = csv_path.stem().string();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 2) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(i + 1) + ": expected 2 columns");
    }
    try {
      std::size_t u0 = 0, u1 = 0;
      const double b = std::stod(r[0], &u0);
      const double f = std::stod(r[1], &u1);
      if (u0 != r[0].size() || u1 != r[1].size()) throw std::invalid_argument("trailing text");
      s.baseline.push_back(b);
      s.final.push_back(f);
    } catch (const std::exception&) {
      if (i == 0) continue;  // header
      throw Error(ErrorKind::ParseError, "line " + std::to_string(i + 1) + ": not a number pair");
    }
  }
  const TestResult r = paired_compare(s, alpha);
  std::printf("pairs           %zu\n", s.baseline.size());
  std::printf("normality p     %s\n", format_real(r.normality_p).c_str());
  std::printf("test            %s\n", std::string(to_string(r.test_kind)).c_str());
  std::printf("statistic       %s\n", format_real(r.statistic).c_str());
  std::printf("p value         %s\n", format_real(r.p_value).c_str());
  std::printf("significant     %s (alpha %s)\n", r.significant ? "true" : "false",
              format_real(alpha).c_str());
  try {
    std::printf("%% variation     %s\n", format_real(percent_variation(s.baseline, s.final)).c_str());
  } catch (const Error& e) {
    std::printf("%% variation     - (%s)\n", e.what());
  }
  return kExitOk;
}

int cmd_gen_fixture(const fs::path& out, const fixture::TrialOptions& opts) {
  const auto summary = fixture::generate_trial(out, opts);
  std::printf("wrote %zu images for %zu volunteers (%zu drifted); manifest %s\n", summary.image_count,
              summary.volunteer_ids.size(), summary.drifted_ids.size(), summary.manifest.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal skin colour and wrinkle analysis for smartphone trial images"};
  app.require_subcommand(1);

  fs::path validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a trial manifest");
  validate_cmd->add_option("manifest", validate_path, "Manifest file")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Process a trial and write CSV tables and SVG plots");
  run_cmd->add_option("manifest", run.manifest, "Manifest file")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--methods", run.methods, "Comma-separated: original,histeq,clahe,card");
  run_cmd->add_option("--seed", run.seed, "RANSAC seed");
  run_cmd->add_option("--alpha", run.alpha, "Significance level");
  run_cmd->add_option("--workers", run.workers, "Worker threads (0 = all cores)");
  run_cmd->add_flag("--keep-intermediates", run.keep_intermediates,
                    "Also write normalized images and edge maps");

  NormalizeArgs norm;
  auto* norm_cmd = app.add_subcommand("normalize", "Normalize one image");
  norm_cmd->add_option("image", norm.image, "Input image")->required();
  norm_cmd->add_option("--method", norm.method, "original, histeq, clahe or card")->required();
  norm_cmd->add_option("--out", norm.out, "Output image (.png or .jpg)")->required();
  norm_cmd->add_option("--card-corners", norm.corners, "x1,y1,...,x4,y4 (top-left clockwise)");
  norm_cmd->add_option("--layout", norm.layout, "Card layout file");
  norm_cmd->add_option("--tiles", norm.tiles, "CLAHE tiles per axis")->check(CLI::PositiveNumber);
  norm_cmd->add_option("--clip-factor", norm.clip_factor, "CLAHE clip factor")->check(CLI::PositiveNumber);

  fs::path wrinkle_image;
  std::string wrinkle_roi;
  auto* wrinkle_cmd = app.add_subcommand("wrinkle", "Wrinkle ratio of one image");
  wrinkle_cmd->add_option("image", wrinkle_image, "Input image")->required();
  wrinkle_cmd->add_option("--roi", wrinkle_roi, "Polygon x1,y1,x2,y2,... (default: whole image)");

  fs::path stats_csv;
  double stats_alpha = kDefaultAlpha;
  auto* stats_cmd = app.add_subcommand("stats", "Paired comparison over a baseline,final CSV");
  stats_cmd->add_option("csv", stats_csv, "Two-column CSV")->required();
  stats_cmd->add_option("--alpha", stats_alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  fs::path fixture_out;
  fixture::TrialOptions fixture_opts;
  auto* gen_cmd = app.add_subcommand("gen-fixture", "Generate a synthetic trial");
  gen_cmd->add_option("--out", fixture_out, "Output directory")->required();
  gen_cmd->add_option("--volunteers", fixture_opts.volunteers, "Volunteers");
  gen_cmd->add_option("--sessions", fixture_opts.sessions, "Scheduled sessions");
  gen_cmd->add_option("--size", fixture_opts.size, "Image side in pixels");
  gen_cmd->add_option("--drifted", fixture_opts.drifted, "Volunteers with colour and wrinkle drift");
  gen_cmd->add_option("--b-drift", fixture_opts.b_drift, "Total skin b change for drifted volunteers");
  gen_cmd->add_option("--seed", fixture_opts.seed, "Generator seed");
  gen_cmd->add_flag("--irregular", fixture_opts.irregular_attendance, "Volunteers miss some sessions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*run_cmd) return cmd_run(run);
    if (*norm_cmd) return cmd_normalize(norm);
    if (*wrinkle_cmd) return cmd_wrinkle(wrinkle_image, wrinkle_roi);
    if (*stats_cmd) return cmd_stats(stats_csv, stats_alpha);
    if (*gen_cmd) return cmd_gen_fixture(fixture_out, fixture_opts);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_validation(e) ? kExitInvalid : kExitFatal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}
