#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skintrial/error.hpp"
#include "skintrial/fixture.hpp"
#include "skintrial/image_io.hpp"
#include "skintrial/manifest.hpp"
#include "skintrial/pipeline.hpp"
#include "skintrial/report.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skintrial;
using skintrial::testing::TempDir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

// Two dates for one volunteer, cheek and temple, original and histeq only.
json minimal_manifest(const TempDir& dir) {
  fs::create_directories(dir / "img");
  for (const char* name : {"c1.png", "c2.png"}) {
    save_image(dir.path() / "img" / name, skintrial::testing::random_rgb(64, 64, 3, 90, 200));
  }
  const auto scene = fixture::make_temple_scene(256, 5);
  save_image(dir.path() / "img" / "t1.png", fixture::render_temple(scene, 8, Affine2::identity(), 1));
  save_image(dir.path() / "img" / "t2.png",
             fixture::render_temple(scene, 8, Affine2::similarity(1.02, 0.05, {128, 128}, 3, -2), 2));
  const json square = json::array({{10, 10}, {50, 10}, {50, 50}, {10, 50}});
  const json temple = json::array({{80, 80}, {176, 80}, {176, 176}, {80, 176}});
  return json{
      {"trial_id", "mini"},
      {"config", {{"methods", {"original", "histeq"}}}},
      {"volunteers",
       {{{"id", "A"},
         {"reference_session", 0},
         {"sessions",
          {{{"date", "2021-03-01"}, {"site", "cheek"}, {"device", "smartphone"}, {"image", "img/c1.png"}, {"roi", square}},
           {{"date", "2021-03-01"}, {"site", "temple"}, {"device", "smartphone"}, {"image", "img/t1.png"}, {"roi", temple}},
           {{"date", "2021-03-08"}, {"site", "cheek"}, {"device", "smartphone"}, {"image", "img/c2.png"}},
           {{"date", "2021-03-08"}, {"site", "temple"}, {"device", "smartphone"}, {"image", "img/t2.png"}}}}}}}};
}

Manifest parse(const TempDir& dir, const json& doc) {
  Manifest m = parse_manifest(doc.dump(), dir.path());
  validate(m);
  return m;
}

}  // namespace

TEST(Manifest, MinimalParsesAndValidates) {
  TempDir dir("manifest_min");
  const Manifest m = parse(dir, minimal_manifest(dir));
  ASSERT_EQ(m.volunteers.size(), 1u);
  EXPECT_EQ(m.volunteers[0].sessions.size(), 4u);
  EXPECT_EQ(m.config.methods.size(), 2u);
  EXPECT_EQ(m.volunteers[0].sessions[2].image_path, dir.path() / "img" / "c2.png");
}

TEST(Manifest, RoundTripsThroughJson) {
  TempDir dir("manifest_rt");
  const Manifest a = parse(dir, minimal_manifest(dir));
  const Manifest b = parse_manifest(to_json(a, dir.path()).dump(), dir.path());
  EXPECT_EQ(to_json(a, dir.path()), to_json(b, dir.path()));
}

TEST(Manifest, DuplicateVolunteerRejected) {
  TempDir dir("manifest_dup");
  json doc = minimal_manifest(dir);
  doc["volunteers"].push_back(doc["volunteers"][0]);
  EXPECT_EQ(kind_of([&] { parse(dir, doc); }), ErrorKind::ValidationError);
}

TEST(Manifest, MissingImageRejected) {
  TempDir dir("manifest_missing");
  json doc = minimal_manifest(dir);
  doc["volunteers"][0]["sessions"][2]["image"] = "img/nope.png";
  EXPECT_EQ(kind_of([&] { parse(dir, doc); }), ErrorKind::ValidationError);
}

TEST(Manifest, ReferenceWithoutRoiRejected) {
  TempDir dir("manifest_roi");
  json doc = minimal_manifest(dir);
  doc["volunteers"][0]["sessions"][1].erase("roi");
  EXPECT_EQ(kind_of([&] { parse(dir, doc); }), ErrorKind::ValidationError);
}

TEST(Manifest, CardMethodNeedsCorners) {
  TempDir dir("manifest_card");
  json doc = minimal_manifest(dir);
  doc["config"]["methods"] = {"card"};
  EXPECT_EQ(kind_of([&] { parse(dir, doc); }), ErrorKind::ValidationError);
}

TEST(Manifest, SyntaxErrorReportsLine) {
  try {
    parse_manifest("{\n  \"trial_id\": \"x\",\n  \"volunteers\": [\n", ".");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
  }
}

TEST(Manifest, WrongTypeNamesTheField) {
  TempDir dir("manifest_type");
  json doc = minimal_manifest(dir);
  doc["volunteers"][0]["sessions"][0]["date"] = 20210301;
  try {
    parse_manifest(doc.dump(), dir.path());
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("date"), std::string::npos) << e.what();
  }
}

TEST(Manifest, AnteraCsvImport) {
  TempDir dir("manifest_csv");
  json doc = minimal_manifest(dir);
  {
    std::ofstream out(dir / "antera.csv");
    out << "volunteer,date,site,parameter,value\r\n"
           "A,2021-03-01,cheek,L,61.5\r\n"
           "A,2021-03-01,cheek,B,14\r\n"
           "A,2021-03-08,temple,wrinkle_depth,33.25\r\n";
  }
  doc["antera_csv"] = "antera.csv";
  const Manifest m = parse(dir, doc);
  std::map<std::string, double> got;
  for (const auto& s : m.volunteers[0].sessions) {
    if (s.device != Device::Antera) continue;
    for (const auto& [k, v] : s.parameters) got[s.date.iso() + "/" + k] = v;
  }
  EXPECT_DOUBLE_EQ(got.at("2021-03-01/L"), 61.5);
  EXPECT_DOUBLE_EQ(got.at("2021-03-01/B"), 14.0);
  EXPECT_DOUBLE_EQ(got.at("2021-03-08/wrinkle_depth"), 33.25);
}

TEST(Pipeline, MinimalRunMeasuresEverySession) {
  TempDir dir("pipe_min");
  const Manifest m = parse(dir, minimal_manifest(dir));
  const ReportBundle b = run_pipeline(m);
  EXPECT_TRUE(b.skipped.empty());
  EXPECT_EQ(b.colour.size(), 4u);  // 2 dates x 2 methods
  ASSERT_EQ(b.wrinkles.size(), 2u);
  EXPECT_EQ(b.wrinkles[0].transform.inlier_count, 0u);
  EXPECT_NEAR(b.wrinkles[1].transform.scale(), 1.02, 0.01);
  EXPECT_NEAR(b.wrinkles[1].transform.rotation(), 0.05, 0.01);
  // The cheek ROI of the reference date is reused on the second date.
  EXPECT_EQ(b.colour[0].sample.pixel_count, b.colour[2].sample.pixel_count);
}

TEST(Pipeline, NothingMeasurableIsAnError) {
  TempDir dir("pipe_none");
  const Manifest m = parse(dir, minimal_manifest(dir));
  for (const char* name : {"c1.png", "c2.png", "t1.png", "t2.png"}) {
    std::ofstream(dir.path() / "img" / name, std::ios::trunc) << "not an image";
  }
  EXPECT_EQ(kind_of([&] { run_pipeline(m); }), ErrorKind::InvalidArgument);
}

TEST(Fixture, IrregularAttendance) {
  TempDir dir("fixture_irregular");
  fixture::TrialOptions opts;
  opts.size = 128;
  opts.irregular_attendance = true;
  const auto summary = fixture::generate_trial(dir.path(), opts);
  const Manifest m = load_manifest(summary.manifest);
  ASSERT_EQ(m.volunteers.size(), 12u);
  std::size_t total = 0;
  for (const auto& v : m.volunteers) {
    std::set<Date> dates;
    for (const auto& s : v.sessions) {
      if (s.device == Device::Smartphone) dates.insert(s.date);
    }
    EXPECT_GE(dates.size(), 5u) << v.id;
    EXPECT_LE(dates.size(), 10u) << v.id;
    total += dates.size();
  }
  EXPECT_DOUBLE_EQ(static_cast<double>(total) / 12.0, 8.5);
}

// One small generated trial shared by the end-to-end tests below.
class SmallTrial : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("small_trial");
    fixture::TrialOptions opts;
    opts.volunteers = 4;
    opts.drifted = 2;
    opts.sessions = 4;
    opts.size = 256;
    opts.seed = 11;
    summary_ = new fixture::TrialSummary(fixture::generate_trial(dir_->path() / "data", opts));
    manifest_ = new Manifest(load_manifest(summary_->manifest));
    bundle_ = new ReportBundle(run_pipeline(*manifest_));
  }
  static void TearDownTestSuite() {
    delete bundle_;
    delete manifest_;
    delete summary_;
    delete dir_;
  }

  static std::vector<double> series(const ReportBundle& b, const std::string& id,
                                    const std::string& metric, std::optional<NormalizationMethod> method) {
    for (const auto& s : b.series) {
      if (s.volunteer_id == id && s.metric == metric && s.method == method) {
        std::vector<double> out;
        for (const auto& p : s.points) out.push_back(p.second);
        return out;
      }
    }
    return {};
  }

  static inline TempDir* dir_ = nullptr;
  static inline fixture::TrialSummary* summary_ = nullptr;
  static inline Manifest* manifest_ = nullptr;
  static inline ReportBundle* bundle_ = nullptr;
};

TEST_F(SmallTrial, EveryCheekSessionGetsEveryMethod) {
  EXPECT_TRUE(bundle_->skipped.empty());
  std::map<std::pair<std::string, Date>, std::set<NormalizationMethod>> seen;
  for (const auto& c : bundle_->colour) seen[{c.volunteer_id, c.sample.session}].insert(c.sample.method);
  EXPECT_EQ(seen.size(), 16u);
  for (const auto& [key, methods] : seen) EXPECT_EQ(methods.size(), 4u);
  EXPECT_EQ(bundle_->wrinkles.size(), 16u);
}

TEST_F(SmallTrial, DriftShowsInCardSeries) {
  const std::set<std::string> drifted(summary_->drifted_ids.begin(), summary_->drifted_ids.end());
  for (const auto& id : summary_->volunteer_ids) {
    const auto b = series(*bundle_, id, "b", NormalizationMethod::ColourCard);
    ASSERT_EQ(b.size(), 4u) << id;
    if (drifted.count(id)) {
      EXPECT_LT(b.back() - b.front(), -5.0) << id;
      const auto w = series(*bundle_, id, "wrinkle_ratio", std::nullopt);
      ASSERT_EQ(w.size(), 4u);
      EXPECT_LT(w.back(), w.front()) << id;
    } else {
      const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
      EXPECT_LE(*hi - *lo, 1.5) << id;
    }
  }
}

TEST_F(SmallTrial, SummaryHasAnteraAndSmartphoneRows) {
  std::set<std::string> names;
  for (const auto& r : bundle_->summary) names.insert(r.parameter);
  for (const char* p : {"Colour (L)", "Colour (A)", "Colour (B)", "Wrinkle overall size", "Wrinkle depth",
                        "Wrinkle max depth", "Smartphone colour (b) [card]", "Smartphone wrinkle ratio"}) {
    EXPECT_TRUE(names.count(p)) << p;
  }
  ASSERT_EQ(bundle_->mse.size(), 4u);
  for (const auto& row : bundle_->mse) EXPECT_EQ(row.n, 4u);
}

TEST_F(SmallTrial, OutputsAreByteIdentical) {
  const ReportBundle again = run_pipeline(*manifest_);
  const fs::path a = dir_->path() / "out_a";
  const fs::path b = dir_->path() / "out_b";
  const auto files_a = emit_csv(*bundle_, a);
  const auto svg_a = emit_svg_plots(*bundle_, a);
  const auto files_b = emit_csv(again, b);
  const auto svg_b = emit_svg_plots(again, b);
  ASSERT_EQ(files_a.size(), files_b.size());
  ASSERT_EQ(svg_a.size(), svg_b.size());
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(other)) << other;
  }
}

TEST_F(SmallTrial, CorruptImageIsIsolated) {
  Manifest m = *manifest_;
  const SessionRecord* victim = nullptr;
  for (const auto& s : m.volunteers[1].sessions) {
    if (s.site == Site::Cheek && s.device == Device::Smartphone && s.date > m.volunteers[1].sessions[0].date) {
      victim = &s;
      break;
    }
  }
  ASSERT_NE(victim, nullptr);
  const fs::path broken = dir_->path() / "broken.png";
  std::ofstream(broken, std::ios::binary) << "\x89PNG garbage";
  const_cast<SessionRecord*>(victim)->image_path = broken;

  const ReportBundle b = run_pipeline(m);
  ASSERT_EQ(b.skipped.size(), 1u);
  EXPECT_EQ(b.skipped[0].volunteer_id, m.volunteers[1].id);
  EXPECT_EQ(b.skipped[0].site, Site::Cheek);
  EXPECT_EQ(b.colour.size(), bundle_->colour.size() - 4);
  EXPECT_EQ(b.wrinkles.size(), bundle_->wrinkles.size());
}

TEST(Pipeline, NullTrialIsFlatAndNotSignificant) {
  TempDir dir("null_trial");
  fixture::TrialOptions opts;
  opts.volunteers = 6;
  opts.drifted = 0;
  opts.sessions = 4;
  opts.size = 256;
  opts.seed = 21;
  const auto summary = fixture::generate_trial(dir.path(), opts);
  const ReportBundle b = run_pipeline(load_manifest(summary.manifest));
  ASSERT_TRUE(b.skipped.empty());
  for (const auto& s : b.series) {
    std::vector<double> v;
    for (const auto& p : s.points) v.push_back(p.second);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (s.metric == "wrinkle_ratio") {
      EXPECT_LE(*hi - *lo, 0.1 * *hi) << s.volunteer_id;
    } else if (s.method == NormalizationMethod::ColourCard) {
      EXPECT_LE(*hi - *lo, 1.5) << s.volunteer_id << " " << s.metric;
    }
  }
  for (const auto& row : b.summary) {
    if (row.parameter.find("[card]") != std::string::npos || row.parameter == "Smartphone wrinkle ratio") {
      ASSERT_TRUE(row.test.has_value()) << row.parameter;
      EXPECT_FALSE(row.test->significant) << row.parameter << " p " << row.test->p_value;
    }
  }
}

TEST(Report, SeriesCsvHasHeaderPlusOneLinePerPoint) {
  TempDir dir("report_csv");
  ReportBundle b;
  b.trial_id = "t";
  b.volunteer_ids = {"V 1"};
  b.series.push_back(MetricSeries{"V 1", "b", NormalizationMethod::ColourCard,
                      {{*Date::parse("2020-01-01"), 1.0}, {*Date::parse("2020-01-02"), 2.0},
                       {*Date::parse("2020-01-03"), 3.5}}});
  emit_csv(b, dir.path());
  const fs::path p = dir / "series" / "V_1_b_card.csv";
  ASSERT_TRUE(fs::exists(p));
  EXPECT_EQ(line_count(p), 4u);
  EXPECT_EQ(slurp(p), "date,value\r\n2020-01-01,1\r\n2020-01-02,2\r\n2020-01-03,3.5\r\n");
}

TEST(Report, EmptyBundleWritesOnlyTables) {
  TempDir dir("report_empty");
  ReportBundle b;
  const auto files = emit_csv(b, dir.path());
  EXPECT_FALSE(fs::exists(dir / "series"));
  for (const char* name : {"summary.csv", "mse.csv", "correlation.csv", "skipped.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_EQ(line_count(dir / "summary.csv"), 1u);
}

TEST(Report, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Report, SinglePointChartHasMarkerButNoPath) {
  const Date d = *Date::parse("2020-05-05");
  const std::string svg = render_chart("one", {ChartPanel{"b", {ChartLine{"card", {{d, 12.0}}}}}});
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  EXPECT_EQ(svg.find("<path"), std::string::npos);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Report, ChartEscapesText) {
  const Date d = *Date::parse("2020-05-05");
  const std::string svg = render_chart("a<b & c", {ChartPanel{"y", {ChartLine{"x\"y", {{d, 1.0}, {d.add_days(3), 2.0}}}}}});
  EXPECT_NE(svg.find("a&lt;b &amp; c"), std::string::npos);
  EXPECT_NE(svg.find("<path"), std::string::npos);
}

TEST(Report, OneColourChartPerVolunteerPlusCombinedWrinkle) {
  TempDir dir("report_svg");
  ReportBundle b;
  b.methods = {NormalizationMethod::Original};
  const Date d0 = *Date::parse("2020-01-01");
  for (int v = 1; v <= 12; ++v) {
    const std::string id = "V" + std::to_string(v);
    b.volunteer_ids.push_back(id);
    for (const char* metric : {"L", "a", "b"}) {
      b.series.push_back(
          MetricSeries{id, metric, NormalizationMethod::Original, {{d0, 1.0 * v}, {d0.add_days(7), 2.0}}});
    }
    b.series.push_back(MetricSeries{id, "wrinkle_ratio", std::nullopt, {{d0, 0.3}, {d0.add_days(7), 0.25}}});
  }
  const auto files = emit_svg_plots(b, dir.path());
  std::size_t colour = 0, wrinkle = 0, all = 0;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (name.ends_with("_colour.svg")) ++colour;
    if (name.ends_with("_wrinkle.svg")) ++wrinkle;
    if (name == "wrinkle_all.svg") ++all;
  }
  EXPECT_EQ(colour, 12u);
  EXPECT_EQ(wrinkle, 12u);
  EXPECT_EQ(all, 1u);
}
