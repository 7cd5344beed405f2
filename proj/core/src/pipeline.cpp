#include "skintrial/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "skintrial/colour.hpp"
#include "skintrial/error.hpp"
#include "skintrial/image_io.hpp"
#include "skintrial/report.hpp"

namespace skintrial {

namespace fs = std::filesystem;

namespace {

struct VolunteerResult {
  std::vector<ColourRecord> colour;
  std::vector<WrinkleRecord> wrinkles;
  std::vector<SkippedSession> skipped;
};

std::uint64_t session_seed(std::uint64_t seed, const std::string& id, const Date& date) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : id + "/" + date.iso()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

const SessionRecord* find_session(const VolunteerRecord& v, const Date& date, Site site) {
  for (const auto& s : v.sessions) {
    if (s.device == Device::Smartphone && s.site == site && s.date == date) return &s;
  }
  return nullptr;
}

class TempleReference {
 public:
  TempleReference(const SessionRecord* rec, const PipelineConfig& cfg) : rec_(rec), cfg_(cfg) {}

  const SessionRecord& record() const { return *rec_; }

  const SiftFeatures& features() {
    if (!loaded_) {
      loaded_ = true;
      try {
        features_ = extract_features(to_grayscale(load_image(rec_->image_path)), cfg_.max_keypoints);
      } catch (const Error& e) {
        error_ = std::string("reference temple image unusable: ") + e.what();
      }
    }
    if (!error_.empty()) throw Error(ErrorKind::InvalidArgument, error_);
    return features_;
  }

 private:
  const SessionRecord* rec_;
  const PipelineConfig& cfg_;
  bool loaded_ = false;
  std::string error_;
  SiftFeatures features_;
};

void save_intermediate(const fs::path& dir, const std::string& name, const auto& img) {
  fs::create_directories(dir);
  save_image(dir / name, img);
}

VolunteerResult process_volunteer(const VolunteerRecord& v, const Manifest& m, const RunOptions& opts) {
  const PipelineConfig& cfg = m.config;
  VolunteerResult out;
  const Date ref_date = v.sessions[v.reference_session].date;
  const SessionRecord* ref_cheek = find_session(v, ref_date, Site::Cheek);
  const SessionRecord* ref_temple = find_session(v, ref_date, Site::Temple);
  TempleReference temple_ref(ref_temple, cfg);
  const fs::path inter = opts.intermediates_dir.empty() ? fs::path{}
                                                        : opts.intermediates_dir / safe_file_stem(v.id);

  std::vector<const SessionRecord*> order;
  for (const auto& s : v.sessions) {
    if (s.device == Device::Smartphone) order.push_back(&s);
  }
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) {
    return std::tie(a->date, a->site) < std::tie(b->date, b->site);
  });

  for (const SessionRecord* s : order) {
    try {
      const ImageRGB img = load_image(s->image_path);
      if (s->site == Site::Cheek) {
        const Roi& roi = s->roi ? *s->roi : *ref_cheek->roi;
        NormalizationContext ctx;
        ctx.clahe = cfg.clahe;
        ctx.card_layout = m.card_layout ? &*m.card_layout : nullptr;
        ctx.card = s->card_corners;
        std::vector<ColourRecord> samples;
        for (NormalizationMethod method : cfg.methods) {
          SkinColourSample sample = skin_colour(img, roi, method, ctx);
          sample.session = s->date;
          samples.push_back({v.id, sample});
          if (!inter.empty()) {
            save_intermediate(inter, s->date.iso() + "_cheek_" + std::string(to_string(method)) + ".png",
                              normalize_image(img, method, ctx));
          }
        }
        out.colour.insert(out.colour.end(), samples.begin(), samples.end());
      } else {
        AlignTransform t = AlignTransform::identity(cfg.transform);
        if (s != &temple_ref.record()) {
          const SiftFeatures& ref = temple_ref.features();
          const SiftFeatures cur = extract_features(to_grayscale(img), cfg.max_keypoints);
          if (ref.descriptors.empty() || cur.descriptors.empty()) {
            throw Error(ErrorKind::EmptyDescriptorSet, "no keypoints to align");
          }
          const auto matches = match_knn(ref.descriptors, cur.descriptors, cfg.ratio_threshold);
          t = estimate_transform(matches, ref.keypoints, cur.keypoints, cfg.transform,
                                 session_seed(cfg.seed, v.id, s->date));
        }
        WrinkleMetrics w = wrinkle_for_session(img, *ref_temple->roi, t);
        w.session = s->date;
        out.wrinkles.push_back({v.id, w, t});
        if (!inter.empty()) {
          const Roi roi = transfer_roi(*ref_temple->roi, t);
          const RoiMask mask = rasterize(roi, img.width(), img.height());
          save_intermediate(inter, s->date.iso() + "_temple_sobel.png",
                            sobel_combined(crop(to_grayscale(img), mask.bounds)));
        }
      }
    } catch (const Error& e) {
      out.skipped.push_back({v.id, s->date, s->site, s->image_path, e.what()});
    }
  }
  return out;
}

struct Pair {
  double baseline;
  double final;
};

SummaryRow compare(std::string label, const std::vector<Pair>& pairs, double alpha) {
  SummaryRow row;
  row.parameter = std::move(label);
  row.n = pairs.size();
  PairedSamples s;
  s.label = row.parameter;
  for (const auto& p : pairs) {
    s.baseline.push_back(p.baseline);
    s.final.push_back(p.final);
  }
  if (pairs.empty()) {
    row.note = "no volunteer has two measurements";
    return row;
  }
  try {
    row.percent_variation = percent_variation(s.baseline, s.final);
  } catch (const Error& e) {
    row.note = e.what();
  }
  try {
    row.test = paired_compare(s, alpha);
  } catch (const Error& e) {
    if (!row.note.empty()) row.note += "; ";
    row.note += e.what();
  }
  return row;
}

std::vector<Pair> first_last(const std::vector<MetricSeries>& series, std::string_view metric,
                             std::optional<NormalizationMethod> method) {
  std::vector<Pair> out;
  for (const auto& s : series) {
    if (s.metric == metric && s.method == method && s.points.size() >= 2) {
      out.push_back({s.points.front().second, s.points.back().second});
    }
  }
  return out;
}

}  // namespace

std::string antera_label(std::string_view parameter) {
  if (parameter == "L" || parameter == "A" || parameter == "B") {
    return "Colour (" + std::string(parameter) + ")";
  }
  if (parameter == "wrinkle_overall_size") return "Wrinkle overall size";
  if (parameter == "wrinkle_depth") return "Wrinkle depth";
  if (parameter == "wrinkle_max_depth") return "Wrinkle max depth";
  return std::string(parameter);
}

ReportBundle run_pipeline(const Manifest& m, const RunOptions& opts) {
  validate(m);
  const std::size_t n = m.volunteers.size();
  std::vector<VolunteerResult> results(n);
  unsigned workers = m.config.workers ? m.config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = process_volunteer(m.volunteers[i], m, opts);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  ReportBundle bundle;
  bundle.trial_id = m.trial_id;
  bundle.methods = m.config.methods;
  bundle.alpha = m.config.alpha;
  for (std::size_t i = 0; i < n; ++i) {
    bundle.volunteer_ids.push_back(m.volunteers[i].id);
    auto& r = results[i];
    bundle.colour.insert(bundle.colour.end(), r.colour.begin(), r.colour.end());
    bundle.wrinkles.insert(bundle.wrinkles.end(), r.wrinkles.begin(), r.wrinkles.end());
    bundle.skipped.insert(bundle.skipped.end(), r.skipped.begin(), r.skipped.end());
  }
  if (bundle.colour.empty() && bundle.wrinkles.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no session produced a measurement");
  }
  assemble_report(bundle, m);
  return bundle;
}

void assemble_report(ReportBundle& bundle, const Manifest& m) {
  bundle.series.clear();
  bundle.summary.clear();
  bundle.mse.clear();
  bundle.correlation.clear();

  static constexpr const char* kChannels[] = {"L", "a", "b"};
  const auto channel = [](const SkinColourSample& s, int c) {
    return c == 0 ? s.L_mean : c == 1 ? s.a_mean : s.b_mean;
  };

  for (const auto& id : bundle.volunteer_ids) {
    for (NormalizationMethod method : bundle.methods) {
      for (int c = 0; c < 3; ++c) {
        MetricSeries s{id, kChannels[c], method, {}};
        for (const auto& rec : bundle.colour) {
          if (rec.volunteer_id == id && rec.sample.method == method) {
            s.points.emplace_back(rec.sample.session, channel(rec.sample, c));
          }
        }
        if (!s.points.empty()) bundle.series.push_back(std::move(s));
      }
    }
    MetricSeries w{id, "wrinkle_ratio", std::nullopt, {}};
    for (const auto& rec : bundle.wrinkles) {
      if (rec.volunteer_id == id) w.points.emplace_back(rec.metrics.session, rec.metrics.wrinkle_ratio);
    }
    if (!w.points.empty()) bundle.series.push_back(std::move(w));
  }
  for (auto& s : bundle.series) {
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  // Antera parameters: first against last recorded value per volunteer.
  std::vector<std::string> params;
  for (auto p : kAnteraColour) params.emplace_back(p);
  for (auto p : kAnteraWrinkle) params.emplace_back(p);
  std::set<std::string> extra;
  for (const auto& v : m.volunteers) {
    for (const auto& s : v.sessions) {
      for (const auto& [k, val] : s.parameters) {
        if (std::find(params.begin(), params.end(), k) == params.end()) extra.insert(k);
      }
    }
  }
  params.insert(params.end(), extra.begin(), extra.end());

  const auto antera_points = [&](const VolunteerRecord& v, const std::string& param) {
    std::vector<std::pair<Date, double>> pts;
    for (const auto& s : v.sessions) {
      if (s.device != Device::Antera) continue;
      if (const auto it = s.parameters.find(param); it != s.parameters.end()) {
        pts.emplace_back(s.date, it->second);
      }
    }
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return pts;
  };

  for (const auto& param : params) {
    std::vector<Pair> pairs;
    for (const auto& v : m.volunteers) {
      const auto pts = antera_points(v, param);
      if (pts.size() >= 2 && pts.front().first < pts.back().first) {
        pairs.push_back({pts.front().second, pts.back().second});
      }
    }
    const bool recorded = std::any_of(m.volunteers.begin(), m.volunteers.end(),
                                      [&](const auto& v) { return !antera_points(v, param).empty(); });
    if (!recorded) continue;
    bundle.summary.push_back(compare(antera_label(param), pairs, bundle.alpha));
  }
  for (NormalizationMethod method : bundle.methods) {
    for (int c = 0; c < 3; ++c) {
      bundle.summary.push_back(compare("Smartphone colour (" + std::string(kChannels[c]) + ") [" +
                                           std::string(to_string(method)) + "]",
                                       first_last(bundle.series, kChannels[c], method), bundle.alpha));
    }
  }
  if (!bundle.wrinkles.empty()) {
    bundle.summary.push_back(compare("Smartphone wrinkle ratio",
                                     first_last(bundle.series, "wrinkle_ratio", std::nullopt),
                                     bundle.alpha));
  }

  // Agreement with the Antera on each volunteer's first day.
  for (NormalizationMethod method : bundle.methods) {
    AgreementRow mse_row{method, 0, {}};
    AgreementRow r_row{method, 0, {}};
    std::array<std::vector<double>, 3> phone, antera;
    for (const auto& v : m.volunteers) {
      std::optional<std::array<double, 3>> a;
      Date a_date;
      for (const auto& s : v.sessions) {
        const auto& p = s.parameters;
        if (s.device != Device::Antera || s.site != Site::Cheek || !p.count("L") || !p.count("A") ||
            !p.count("B")) {
          continue;
        }
        if (!a || s.date < a_date) {
          a = std::array<double, 3>{p.at("L"), p.at("A"), p.at("B")};
          a_date = s.date;
        }
      }
      const SkinColourSample* first = nullptr;
      for (const auto& rec : bundle.colour) {
        if (rec.volunteer_id == v.id && rec.sample.method == method &&
            (!first || rec.sample.session < first->session)) {
          first = &rec.sample;
        }
      }
      if (!a || !first) continue;
      for (int c = 0; c < 3; ++c) {
        phone[c].push_back(channel(*first, c));
        antera[c].push_back((*a)[static_cast<std::size_t>(c)]);
      }
    }
    mse_row.n = r_row.n = phone[0].size();
    for (int c = 0; c < 3; ++c) {
      try {
        mse_row.value[static_cast<std::size_t>(c)] = mse(phone[c], antera[c]);
      } catch (const Error&) {
      }
      try {
        r_row.value[static_cast<std::size_t>(c)] = pearson(phone[c], antera[c]);
      } catch (const Error&) {
      }
    }
    bundle.mse.push_back(mse_row);
    bundle.correlation.push_back(r_row);
  }
}

}  // namespace skintrial
