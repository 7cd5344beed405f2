#include "skintrial/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "skintrial/error.hpp"
#include "skintrial/image_io.hpp"
#include "skintrial/manifest.hpp"

namespace skintrial::fixture {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Splits one seed into independent streams.
std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double dist_to_segment(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct Box {
  int x0, y0, x1, y1;
};

Box clip_box(double cx0, double cy0, double cx1, double cy1, int w, int h) {
  return {std::max(0, static_cast<int>(std::floor(cx0))), std::max(0, static_cast<int>(std::floor(cy0))),
          std::min(w, static_cast<int>(std::ceil(cx1)) + 1), std::min(h, static_cast<int>(std::ceil(cy1)) + 1)};
}

}  // namespace

CardLayout synthetic_card_layout() {
  // A classic 24-patch checker palette in sRGB; purple sits at row 1, column 3.
  static constexpr Rgb kPalette[4][6] = {
      {{115, 82, 68}, {194, 150, 130}, {98, 122, 157}, {87, 108, 67}, {133, 128, 177}, {103, 189, 170}},
      {{214, 126, 44}, {80, 91, 166}, {193, 90, 99}, {94, 60, 108}, {157, 188, 64}, {224, 163, 46}},
      {{56, 61, 150}, {70, 148, 73}, {175, 54, 60}, {231, 199, 31}, {187, 86, 149}, {8, 133, 161}},
      {{243, 243, 242}, {200, 200, 200}, {160, 160, 160}, {122, 122, 121}, {85, 85, 85}, {52, 52, 52}},
  };
  CardLayout layout;
  layout.rows = 4;
  layout.cols = 6;
  layout.margin = 0.5;
  layout.key_patch = {1, 3};
  for (const auto& row : kPalette) {
    for (const Rgb& c : row) layout.reference.push_back(rgb_to_lab(c));
  }
  return layout;
}

CardAnnotation card_quad(Point2 origin, double width, double height, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  const auto at = [&](double u, double v) {
    return Point2{origin.x + u * c - v * s, origin.y + u * s + v * c};
  };
  return CardAnnotation{{at(0, 0), at(width, 0), at(width, height), at(0, height)}};
}

void paint_card(ImageRGB& img, const CardAnnotation& ann, const CardLayout& layout) {
  const Point2 o = ann.corners[0];
  const Point2 eu{ann.corners[1].x - o.x, ann.corners[1].y - o.y};
  const Point2 ev{ann.corners[3].x - o.x, ann.corners[3].y - o.y};
  const double det = eu.x * ev.y - eu.y * ev.x;
  if (std::abs(det) < 1e-9) throw Error(ErrorKind::InvalidArgument, "degenerate card quad");

  std::vector<Rgb> colours;
  for (const auto& lab : layout.reference) colours.push_back(lab_to_rgb(lab));
  constexpr double kGutter = 0.08;
  constexpr Rgb kGutterColour{28, 28, 30};

  double xmin = o.x, xmax = o.x, ymin = o.y, ymax = o.y;
  for (const auto& p : ann.corners) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const Box box = clip_box(xmin, ymin, xmax, ymax, img.width(), img.height());
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double px = x + 0.5 - o.x, py = y + 0.5 - o.y;
      const double u = (px * ev.y - py * ev.x) / det;
      const double v = (eu.x * py - eu.y * px) / det;
      if (u < 0 || u >= 1 || v < 0 || v >= 1) continue;
      const double cu = u * layout.cols, cv = v * layout.rows;
      const int col = static_cast<int>(cu), row = static_cast<int>(cv);
      const double fu = cu - col, fv = cv - row;
      const bool gutter = fu < kGutter || fu > 1 - kGutter || fv < kGutter || fv > 1 - kGutter;
      img.set(x, y, gutter ? kGutterColour : colours[static_cast<std::size_t>(row * layout.cols + col)]);
    }
  }
}

ImageRGB render_skin(int width, int height, const LabColour& skin, std::uint64_t pattern_seed,
                     std::uint64_t noise_seed) {
  std::mt19937_64 pattern(pattern_seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const double px = phase(pattern), py = phase(pattern);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.5);

  ImageRGB img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double ripple = 2.0 * std::sin(2 * std::numbers::pi * 1.3 * x / width + px) *
                            std::cos(2 * std::numbers::pi * 0.9 * y / height + py);
      const Rgb c = lab_to_rgb(clamp_lab({skin.L + ripple, skin.a, skin.b}));
      img.set(x, y, {to_u8(c.r + noise(rng)), to_u8(c.g + noise(rng)), to_u8(c.b + noise(rng))});
    }
  }
  return img;
}

Roi cheek_roi(int size) {
  return Roi::rectangle(0.3 * size, 0.1 * size, 0.7 * size, 0.5 * size);
}

ImageRGB apply_cast(const ImageRGB& img, const LabColour& cast) {
  return apply_delta(img, {cast.L, cast.a, cast.b});
}

TempleScene make_temple_scene(int size, std::uint64_t seed, std::size_t max_lines) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TempleScene scene;
  scene.size = size;
  const double s = size;
  const int blobs = static_cast<int>(320.0 * (s / 512.0) * (s / 512.0)) + 20;
  for (int i = 0; i < blobs; ++i) {
    Blob b;
    b.center = {unit(rng) * s, unit(rng) * s};
    b.sigma = (2.0 + 4.0 * unit(rng)) * s / 512.0;
    b.sigma_minor = b.sigma * (0.35 + 0.65 * unit(rng));
    b.angle = unit(rng) * std::numbers::pi;
    b.amplitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * (20.0 + 25.0 * unit(rng));
    scene.blobs.push_back(b);
  }
  const double rx0 = 0.3 * s, rx1 = 0.7 * s, ry0 = 0.32 * s, ry1 = 0.68 * s;
  for (std::size_t i = 0; i < max_lines; ++i) {
    const double angle = (unit(rng) - 0.5) * 50.0 * std::numbers::pi / 180.0;
    const double half = (0.06 + 0.05 * unit(rng)) * s;
    const double hx = half * std::cos(angle), hy = half * std::sin(angle);
    const double cx = rx0 + std::abs(hx) + 4 + unit(rng) * (rx1 - rx0 - 2 * std::abs(hx) - 8);
    const double cy = ry0 + std::abs(hy) + 4 + unit(rng) * (ry1 - ry0 - 2 * std::abs(hy) - 8);
    scene.lines.push_back({{cx - hx, cy - hy}, {cx + hx, cy + hy}, 1.2 * s / 512.0, 60.0});
  }
  return scene;
}

Roi temple_roi(int size) {
  return Roi::rectangle(0.3 * size, 0.32 * size, 0.7 * size, 0.68 * size);
}

ImageRGB render_temple(const TempleScene& scene, std::size_t line_count, const Affine2& pose,
                       std::uint64_t noise_seed) {
  const int n = scene.size;
  const double scale = std::sqrt(std::abs(pose.determinant()));
  std::vector<double> acc(static_cast<std::size_t>(n) * n, scene.base);
  const auto add = [&](const Box& b, auto&& value) {
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) {
        acc[static_cast<std::size_t>(y) * n + x] += value(Point2{x + 0.5, y + 0.5});
      }
    }
  };
  for (const Blob& blob : scene.blobs) {
    const Point2 c = pose.apply(blob.center);
    const double s1 = blob.sigma * scale, s2 = blob.sigma_minor * scale, r = 3.0 * s1;
    // Blob axis in image space follows the pose rotation.
    const double theta = blob.angle + std::atan2(pose.m[3], pose.m[0]);
    const double ct = std::cos(theta), st = std::sin(theta);
    add(clip_box(c.x - r, c.y - r, c.x + r, c.y + r, n, n), [&](Point2 p) {
      const double dx = p.x - c.x, dy = p.y - c.y;
      const double u = (dx * ct + dy * st) / s1, v = (-dx * st + dy * ct) / s2;
      return blob.amplitude * std::exp(-0.5 * (u * u + v * v));
    });
  }
  const std::size_t lines = std::min(line_count, scene.lines.size());
  for (std::size_t i = 0; i < lines; ++i) {
    const Line& l = scene.lines[i];
    const Point2 a = pose.apply(l.a), b = pose.apply(l.b);
    const double s = l.sigma * scale, r = 3.0 * s;
    add(clip_box(std::min(a.x, b.x) - r, std::min(a.y, b.y) - r, std::max(a.x, b.x) + r,
                 std::max(a.y, b.y) + r, n, n),
        [&](Point2 p) {
          const double d = dist_to_segment(p, a, b);
          return -l.depth * std::exp(-d * d / (2 * s * s));
        });
  }
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 2.0);
  ImageRGB img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double g = acc[static_cast<std::size_t>(y) * n + x] + noise(rng);
      img.set(x, y, {to_u8(g), to_u8(g * 0.85), to_u8(g * 0.72)});
    }
  }
  return img;
}

TrialSummary generate_trial(const fs::path& out_dir, const TrialOptions& opts) {
  if (opts.volunteers < 1 || opts.sessions < 2 || opts.size < 128 || opts.drifted < 0 ||
      opts.drifted > opts.volunteers) {
    throw Error(ErrorKind::InvalidArgument,
                "trial needs >= 1 volunteer, >= 2 sessions, size >= 128 and 0 <= drifted <= volunteers");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  const int size = opts.size;
  const CardLayout layout = synthetic_card_layout();
  const fs::path layout_path = out_dir / "card.json";
  {
    std::ofstream out(layout_path);
    out << to_json(layout).dump(2) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + layout_path.string());
  }

  std::mt19937_64 master(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](std::mt19937_64& r, double lo, double hi) { return lo + (hi - lo) * unit(r); };

  std::vector<int> order(static_cast<std::size_t>(opts.volunteers));
  for (int i = 0; i < opts.volunteers; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), master);
  std::vector<bool> drifted(order.size(), false);
  for (int i = 0; i < opts.drifted; ++i) drifted[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  // Visit days spread over four weeks.
  std::vector<int> offsets;
  for (int k = 0; k < opts.sessions; ++k) {
    offsets.push_back(static_cast<int>(std::lround(28.0 * k / (opts.sessions - 1))));
  }
  const Date start{2020, 1, 6};
  const auto date_at = [&](int offset) { return start.add_days(offset); };
  // Sessions missed per volunteer when attendance is irregular: mean 1.5 of 10.
  static constexpr int kMissed[] = {0, 0, 0, 0, 0, 1, 1, 2, 2, 3, 4, 5};

  Manifest manifest;
  manifest.trial_id = "synthetic-" + std::to_string(opts.seed);
  manifest.card_layout_path = layout_path;
  manifest.config.seed = opts.seed;

  TrialSummary summary;
  json truth;
  truth["seed"] = opts.seed;
  truth["volunteers"] = json::array();

  for (int v = 0; v < opts.volunteers; ++v) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "V%02d", v + 1);
    const std::string id = idbuf;
    std::mt19937_64 rng(mix(opts.seed, static_cast<std::uint64_t>(v)));
    const bool drift = drifted[static_cast<std::size_t>(v)];
    LabColour skin;
    skin.L = uniform(rng, 55, 70);
    skin.a = uniform(rng, 10, 18);
    skin.b = uniform(rng, 14, 24);
    const std::uint64_t skin_pattern = rng();
    const TempleScene scene = make_temple_scene(size, rng(), opts.wrinkle_lines_start);

    std::vector<int> attended(offsets.size());
    for (std::size_t k = 0; k < offsets.size(); ++k) attended[k] = static_cast<int>(k);
    if (opts.irregular_attendance) {
      const int miss = std::min(kMissed[static_cast<std::size_t>(v) % std::size(kMissed)],
                                static_cast<int>(offsets.size()) - 2);
      std::vector<int> middle(attended.begin() + 1, attended.end() - 1);
      std::shuffle(middle.begin(), middle.end(), rng);
      middle.resize(middle.size() - static_cast<std::size_t>(miss));
      std::sort(middle.begin(), middle.end());
      attended = {0};
      attended.insert(attended.end(), middle.begin(), middle.end());
      attended.push_back(static_cast<int>(offsets.size()) - 1);
    }

    const fs::path img_dir = out_dir / "images" / id;
    fs::create_directories(img_dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + img_dir.string());

    VolunteerRecord rec;
    rec.id = id;
    rec.reference_session = 0;
    json tv;
    tv["id"] = id;
    tv["drifted"] = drift;
    tv["visits"] = json::array();

    const double last = offsets.back();
    std::normal_distribution<double> antera_noise(0.0, 0.3);
    for (std::size_t ai = 0; ai < attended.size(); ++ai) {
      const int k = attended[ai];
      const double t = offsets[static_cast<std::size_t>(k)] / last;
      const Date date = date_at(offsets[static_cast<std::size_t>(k)]);
      const LabColour true_skin{skin.L, skin.a, skin.b + (drift ? opts.b_drift * t : 0.0)};
      const std::size_t lines =
          drift ? static_cast<std::size_t>(std::lround(
                      static_cast<double>(opts.wrinkle_lines_start) +
                      (static_cast<double>(opts.wrinkle_lines_end) - static_cast<double>(opts.wrinkle_lines_start)) * t))
                : opts.control_lines;
      const bool reference = ai == 0;

      // Cheek: skin, card held at a slightly different pose each visit, then a uniform cast.
      ImageRGB cheek = render_skin(size, size, true_skin, skin_pattern, rng());
      const double card_x = uniform(rng, 0.11, 0.13) * size;
      const double card_y = uniform(rng, 0.60, 0.62) * size;
      const double card_rot = uniform(rng, -2.0, 2.0) * std::numbers::pi / 180.0;
      const CardAnnotation ann = card_quad({card_x, card_y}, 0.72 * size, 0.3 * size, card_rot);
      paint_card(cheek, ann, layout);
      LabColour cast;
      cast.L = uniform(rng, -3, 3);
      cast.a = uniform(rng, -4, 4);
      cast.b = uniform(rng, -4, 4);
      cheek = apply_cast(cheek, cast);
      const fs::path cheek_path = img_dir / (date.iso() + "_cheek.png");
      save_image(cheek_path, cheek);

      // Temple: the same skin texture under a small random similarity.
      const double scale = uniform(rng, 0.95, 1.05);
      const double angle = uniform(rng, -5.0, 5.0) * std::numbers::pi / 180.0;
      const double tx = uniform(rng, -12, 12);
      const double ty = uniform(rng, -12, 12);
      const Affine2 pose = Affine2::similarity(scale, angle, {size / 2.0, size / 2.0}, tx, ty);
      const ImageRGB temple = render_temple(scene, lines, pose, rng());
      const fs::path temple_path = img_dir / (date.iso() + "_temple.png");
      save_image(temple_path, temple);
      summary.image_count += 2;

      SessionRecord cs;
      cs.date = date;
      cs.site = Site::Cheek;
      cs.image_path = cheek_path;
      cs.card_corners = ann;
      if (reference) cs.roi = cheek_roi(size);
      rec.sessions.push_back(cs);

      SessionRecord ts;
      ts.date = date;
      ts.site = Site::Temple;
      ts.image_path = temple_path;
      if (reference) {
        const Roi canonical = temple_roi(size);
        std::vector<Point2> pts;
        for (const auto& p : canonical.vertices()) pts.push_back(pose.apply(p));
        ts.roi = Roi(std::move(pts));
      }
      rec.sessions.push_back(ts);

      if (ai == 0 || ai + 1 == attended.size()) {
        SessionRecord ac;
        ac.date = date;
        ac.site = Site::Cheek;
        ac.device = Device::Antera;
        ac.parameters["L"] = true_skin.L + antera_noise(rng);
        ac.parameters["A"] = true_skin.a + antera_noise(rng);
        ac.parameters["B"] = true_skin.b + antera_noise(rng);
        rec.sessions.push_back(ac);
        SessionRecord at;
        at.date = date;
        at.site = Site::Temple;
        at.device = Device::Antera;
        const double n = static_cast<double>(lines);
        at.parameters["wrinkle_overall_size"] = 2.0 * n + antera_noise(rng);
        at.parameters["wrinkle_depth"] = 30.0 + 1.5 * n + antera_noise(rng);
        at.parameters["wrinkle_max_depth"] = 60.0 + 3.0 * n + antera_noise(rng);
        rec.sessions.push_back(at);
      }
      tv["visits"].push_back({{"date", date.iso()},
                              {"L", true_skin.L},
                              {"a", true_skin.a},
                              {"b", true_skin.b},
                              {"lines", lines}});
    }
    summary.volunteer_ids.push_back(id);
    if (drift) summary.drifted_ids.push_back(id);
    truth["volunteers"].push_back(tv);
    manifest.volunteers.push_back(std::move(rec));
  }

  summary.manifest = out_dir / "manifest.json";
  {
    std::ofstream out(summary.manifest);
    out << to_json(manifest, out_dir).dump(2) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + summary.manifest.string());
  }
  {
    std::ofstream out(out_dir / "truth.json");
    out << truth.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot write truth.json");
  }
  return summary;
}

}  // namespace skintrial::fixture
