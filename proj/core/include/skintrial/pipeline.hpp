#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skintrial/alignment.hpp"
#include "skintrial/date.hpp"
#include "skintrial/manifest.hpp"
#include "skintrial/metrics.hpp"
#include "skintrial/stats.hpp"

namespace skintrial {

struct SkippedSession {
  std::string volunteer_id;
  Date date;
  Site site = Site::Cheek;
  std::filesystem::path image;
  std::string error;
};

struct ColourRecord {
  std::string volunteer_id;
  SkinColourSample sample;  ///< sample.session holds the date
};

struct WrinkleRecord {
  std::string volunteer_id;
  WrinkleMetrics metrics;  ///< metrics.session holds the date
  AlignTransform transform;  ///< reference session -> this session
};

/// One plotted/exported time series. Points are strictly date-ascending.
struct MetricSeries {
  std::string volunteer_id;
  std::string metric;  ///< "L", "a", "b" or "wrinkle_ratio"
  std::optional<NormalizationMethod> method;
  std::vector<std::pair<Date, double>> points;
};

/// First-versus-last comparison of one parameter across volunteers.
struct SummaryRow {
  std::string parameter;
  std::size_t n = 0;  ///< volunteers contributing a baseline/final pair
  std::optional<double> percent_variation;
  std::optional<TestResult> test;
  std::string note;  ///< why a value is missing
};

/// Day-1 smartphone values against day-1 Antera values, per LAB channel.
struct AgreementRow {
  NormalizationMethod method = NormalizationMethod::Original;
  std::size_t n = 0;
  std::array<std::optional<double>, 3> value;  ///< L, A, B
};

struct ReportBundle {
  std::string trial_id;
  std::vector<NormalizationMethod> methods;
  double alpha = kDefaultAlpha;
  std::vector<std::string> volunteer_ids;
  std::vector<ColourRecord> colour;
  std::vector<WrinkleRecord> wrinkles;
  std::vector<MetricSeries> series;
  std::vector<SummaryRow> summary;
  std::vector<AgreementRow> mse;
  std::vector<AgreementRow> correlation;
  std::vector<SkippedSession> skipped;
};

struct RunOptions {
  /// Normalized cheek images and temple edge maps are written here when non-empty.
  std::filesystem::path intermediates_dir;
};

/// Processes every smartphone session, then assembles series and trial statistics.
/// Per-session failures become SkippedSession entries. Throws InvalidArgument when no
/// session yields a measurement.
ReportBundle run_pipeline(const Manifest& m, const RunOptions& opts = {});

/// Builds series and statistics from measured records; run_pipeline's second half.
void assemble_report(ReportBundle& bundle, const Manifest& m);

/// Table-row label of an Antera parameter, e.g. "B" -> "Colour (B)".
std::string antera_label(std::string_view parameter);

}  // namespace skintrial
