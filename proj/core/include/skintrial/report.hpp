#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "skintrial/pipeline.hpp"

namespace skintrial {

/// Writes series/<volunteer>_<metric>[_<method>].csv, summary.csv, mse.csv,
/// correlation.csv, colour.csv, wrinkle.csv and skipped.csv. Returns the files written.
/// Throws IoError.
std::vector<std::filesystem::path> emit_csv(const ReportBundle& bundle,
                                            const std::filesystem::path& out_dir);

/// Writes plots/<volunteer>_colour.svg, plots/<volunteer>_wrinkle.svg and
/// plots/wrinkle_all.svg. Returns the files written. Throws IoError.
std::vector<std::filesystem::path> emit_svg_plots(const ReportBundle& bundle,
                                                  const std::filesystem::path& out_dir);

/// Volunteer id made safe for file names: characters outside [A-Za-z0-9_-] become '_'.
std::string safe_file_stem(std::string_view id);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view text);

/// Six significant digits, "%.6g".
std::string format_real(double v);

struct ChartLine {
  std::string label;
  std::vector<std::pair<Date, double>> points;
};

struct ChartPanel {
  std::string y_label;
  std::vector<ChartLine> lines;
};

/// Self-contained SVG line chart with one panel per entry, stacked vertically and sharing
/// the date axis. A single-point line is drawn as a marker only.
std::string render_chart(std::string_view title, const std::vector<ChartPanel>& panels);

}  // namespace skintrial
