#include "skintrial/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "skintrial/error.hpp"

namespace skintrial {

namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  written.push_back(path);
}

std::string row(std::initializer_list<std::string> fields) {
  std::string line;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) line += ',';
    line += csv_field(f);
    first = false;
  }
  return line + "\r\n";
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

}  // namespace

std::string safe_file_stem(std::string_view id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<fs::path> emit_csv(const ReportBundle& bundle, const fs::path& out_dir) {
  std::vector<fs::path> written;
  make_dir(out_dir);
  if (!bundle.series.empty()) make_dir(out_dir / "series");
  for (const auto& s : bundle.series) {
    std::string name = safe_file_stem(s.volunteer_id) + "_" + s.metric;
    if (s.method) name += "_" + std::string(to_string(*s.method));
    std::string text = row({"date", "value"});
    for (const auto& [d, v] : s.points) text += row({d.iso(), format_real(v)});
    write_file(out_dir / "series" / (name + ".csv"), text, written);
  }

  std::string summary = row({"parameter", "% variation", "significant", "p value", "test", "note"});
  for (const auto& r : bundle.summary) {
    summary += row({r.parameter, opt_real(r.percent_variation),
                    r.test ? (r.test->significant ? "true" : "false") : "",
                    r.test ? format_real(r.test->p_value) : "",
                    r.test ? std::string(to_string(r.test->test_kind)) : "", r.note});
  }
  write_file(out_dir / "summary.csv", summary, written);

  std::string mse_text = row({"method", "MSE (L)", "MSE (A)", "MSE (B)", "n"});
  for (const auto& r : bundle.mse) {
    mse_text += row({std::string(to_string(r.method)), opt_real(r.value[0]), opt_real(r.value[1]),
                     opt_real(r.value[2]), std::to_string(r.n)});
  }
  write_file(out_dir / "mse.csv", mse_text, written);

  std::string corr = row({"method", "r (L)", "r (A)", "r (B)", "n"});
  for (const auto& r : bundle.correlation) {
    corr += row({std::string(to_string(r.method)), opt_real(r.value[0]), opt_real(r.value[1]),
                 opt_real(r.value[2]), std::to_string(r.n)});
  }
  write_file(out_dir / "correlation.csv", corr, written);

  std::string colour = row({"volunteer", "date", "method", "L", "a", "b", "pixels"});
  for (const auto& c : bundle.colour) {
    colour += row({c.volunteer_id, c.sample.session.iso(), std::string(to_string(c.sample.method)),
                   format_real(c.sample.L_mean), format_real(c.sample.a_mean),
                   format_real(c.sample.b_mean), std::to_string(c.sample.pixel_count)});
  }
  write_file(out_dir / "colour.csv", colour, written);

  std::string wrinkle = row({"volunteer", "date", "sobel mean", "image mean", "wrinkle ratio",
                             "laplacian mean", "pixels", "scale", "rotation (deg)", "inliers"});
  for (const auto& w : bundle.wrinkles) {
    const auto& m = w.metrics;
    wrinkle += row({w.volunteer_id, m.session.iso(), format_real(m.sobel_mean),
                    format_real(m.image_mean), format_real(m.wrinkle_ratio),
                    format_real(m.laplacian_mean), std::to_string(m.pixel_count),
                    format_real(w.transform.scale()),
                    format_real(w.transform.rotation() * 180.0 / 3.14159265358979323846),
                    // Reference sessions are not aligned, so there is no inlier count.
                    w.transform.inlier_count ? std::to_string(w.transform.inlier_count) : ""});
  }
  write_file(out_dir / "wrinkle.csv", wrinkle, written);

  std::string skipped = row({"volunteer", "date", "site", "image", "error"});
  for (const auto& s : bundle.skipped) {
    skipped += row({s.volunteer_id, s.date.iso(), std::string(to_string(s.site)),
                    s.image.generic_string(), s.error});
  }
  write_file(out_dir / "skipped.csv", skipped, written);
  return written;
}

std::string render_chart(std::string_view title, const std::vector<ChartPanel>& panels) {
  constexpr double kWidth = 760, kLeft = 80, kRight = 170, kTop = 40, kPanelH = 200, kGap = 70;
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + static_cast<double>(panels.size()) * (kPanelH + kGap) + 20;

  std::set<Date> dates;
  for (const auto& p : panels) {
    for (const auto& l : p.lines) {
      for (const auto& pt : l.points) dates.insert(pt.first);
    }
  }
  double x0 = 0, x1 = 1;
  if (!dates.empty()) {
    x0 = static_cast<double>(dates.begin()->days_since_epoch());
    x1 = static_cast<double>(dates.rbegin()->days_since_epoch());
  }
  if (x1 - x0 < 1) {
    x0 -= 1;
    x1 += 1;
  }
  const auto px = [&](const Date& d) {
    return kLeft + (static_cast<double>(d.days_since_epoch()) - x0) / (x1 - x0) * plot_w;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kWidth) << "\" height=\""
      << fixed(height) << "\" viewBox=\"0 0 " << fixed(kWidth) << ' ' << fixed(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";

  // Date ticks: every session date when few, otherwise an even subset.
  std::vector<Date> ticks(dates.begin(), dates.end());
  if (ticks.size() > 10) {
    std::vector<Date> thin;
    for (std::size_t i = 0; i < 10; ++i) thin.push_back(ticks[i * (ticks.size() - 1) / 9]);
    thin.erase(std::unique(thin.begin(), thin.end()), thin.end());
    ticks = thin;
  }

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const ChartPanel& panel = panels[pi];
    const double top = kTop + static_cast<double>(pi) * (kPanelH + kGap);
    const double bottom = top + kPanelH;
    double y0 = 0, y1 = 0;
    bool any = false;
    for (const auto& l : panel.lines) {
      for (const auto& pt : l.points) {
        y0 = any ? std::min(y0, pt.second) : pt.second;
        y1 = any ? std::max(y1, pt.second) : pt.second;
        any = true;
      }
    }
    if (!any) {
      y0 = 0;
      y1 = 1;
    }
    const double pad = y1 > y0 ? 0.08 * (y1 - y0) : std::max(1e-3, 0.05 * std::abs(y0));
    y0 -= pad;
    y1 += pad;
    const auto py = [&](double v) { return bottom - (v - y0) / (y1 - y0) * kPanelH; };

    svg << "<g>\n";
    svg << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(plot_w)
        << "\" height=\"" << fixed(kPanelH) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = y0 + (y1 - y0) * k / 4.0;
      svg << "<line x1=\"" << fixed(kLeft - 4) << "\" y1=\"" << fixed(py(v)) << "\" x2=\""
          << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(py(v)) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << fixed(kLeft - 7) << "\" y=\"" << fixed(py(v) + 4)
          << "\" text-anchor=\"end\">" << xml_escape(format_real(std::round(v * 1e4) / 1e4)) << "</text>\n";
    }
    for (const Date& d : ticks) {
      svg << "<line x1=\"" << fixed(px(d)) << "\" y1=\"" << fixed(bottom) << "\" x2=\"" << fixed(px(d))
          << "\" y2=\"" << fixed(bottom + 4) << "\" stroke=\"#444\"/>\n";
      svg << "<text x=\"" << fixed(px(d)) << "\" y=\"" << fixed(bottom + 16)
          << "\" text-anchor=\"end\" transform=\"rotate(-30 " << fixed(px(d)) << ' '
          << fixed(bottom + 16) << ")\">" << d.iso() << "</text>\n";
    }
    svg << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(bottom + 52)
        << "\" text-anchor=\"middle\">date</text>\n";
    svg << "<text x=\"18\" y=\"" << fixed(top + kPanelH / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << fixed(top + kPanelH / 2) << ")\">" << xml_escape(panel.y_label) << "</text>\n";

    for (std::size_t li = 0; li < panel.lines.size(); ++li) {
      const ChartLine& line = panel.lines[li];
      const char* colour = kPalette[li % std::size(kPalette)];
      if (line.points.size() >= 2) {
        svg << "<path fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" d=\"";
        for (std::size_t k = 0; k < line.points.size(); ++k) {
          svg << (k ? " L" : "M") << fixed(px(line.points[k].first)) << ','
              << fixed(py(line.points[k].second));
        }
        svg << "\"/>\n";
      }
      for (const auto& pt : line.points) {
        svg << "<circle cx=\"" << fixed(px(pt.first)) << "\" cy=\"" << fixed(py(pt.second))
            << "\" r=\"2.5\" fill=\"" << colour << "\"/>\n";
      }
      const double ly = top + 12 + 16 * static_cast<double>(li);
      svg << "<rect x=\"" << fixed(kLeft + plot_w + 12) << "\" y=\"" << fixed(ly - 8)
          << "\" width=\"10\" height=\"10\" fill=\"" << colour << "\"/>\n";
      svg << "<text x=\"" << fixed(kLeft + plot_w + 27) << "\" y=\"" << fixed(ly) << "\">"
          << xml_escape(line.label) << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<fs::path> emit_svg_plots(const ReportBundle& bundle, const fs::path& out_dir) {
  std::vector<fs::path> written;
  const fs::path dir = out_dir / "plots";
  make_dir(dir);
  const auto find = [&](const std::string& id, std::string_view metric,
                        std::optional<NormalizationMethod> method) -> const MetricSeries* {
    for (const auto& s : bundle.series) {
      if (s.volunteer_id == id && s.metric == metric && s.method == method) return &s;
    }
    return nullptr;
  };

  ChartPanel all{"wrinkle ratio", {}};
  for (const auto& id : bundle.volunteer_ids) {
    std::vector<ChartPanel> colour;
    for (const char* ch : {"L", "a", "b"}) {
      ChartPanel panel{std::string("mean ") + ch, {}};
      for (NormalizationMethod m : bundle.methods) {
        if (const auto* s = find(id, ch, m)) panel.lines.push_back({std::string(to_string(m)), s->points});
      }
      if (!panel.lines.empty()) colour.push_back(std::move(panel));
    }
    if (!colour.empty()) {
      write_file(dir / (safe_file_stem(id) + "_colour.svg"), render_chart("Skin colour, volunteer " + id, colour),
                 written);
    }
    if (const auto* s = find(id, "wrinkle_ratio", std::nullopt)) {
      write_file(dir / (safe_file_stem(id) + "_wrinkle.svg"),
                 render_chart("Wrinkle ratio, volunteer " + id, {ChartPanel{"wrinkle ratio", {{id, s->points}}}}),
                 written);
      all.lines.push_back({id, s->points});
    }
  }
  if (!all.lines.empty()) {
    write_file(dir / "wrinkle_all.svg", render_chart("Wrinkle ratio, all volunteers", {all}), written);
  }
  return written;
}

}  // namespace skintrial
