#include "skintrial/card_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

Point2 lerp(Point2 a, Point2 b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

// Bilinear point on the card at fractional grid position (u across columns, v down rows).
Point2 card_point(const CardAnnotation& ann, double u, double v) {
  const auto& c = ann.corners;
  return lerp(lerp(c[0], c[1], u), lerp(c[3], c[2], u), v);
}

double number_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::ParseError, where + ": expected a number");
  return j.get<double>();
}

int int_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) throw Error(ErrorKind::ParseError, where + ": expected an integer");
  return j.get<int>();
}

}  // namespace

const LabColour& CardLayout::reference_at(PatchIndex p) const {
  return reference.at(static_cast<std::size_t>(p.row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(p.col));
}

void CardLayout::validate() const {
  if (rows < 1 || cols < 1) throw Error(ErrorKind::InvalidArgument, "card grid must be >= 1x1");
  if (reference.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw Error(ErrorKind::InvalidArgument, "card reference must have rows*cols entries");
  }
  if (!(margin > 0.0 && margin <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "card margin must be in (0, 1]");
  }
  if (key_patch.row < 0 || key_patch.row >= rows || key_patch.col < 0 || key_patch.col >= cols) {
    throw Error(ErrorKind::InvalidArgument, "card key_patch outside grid");
  }
  for (const auto& c : reference) {
    if (!lab_in_range(c)) throw Error(ErrorKind::InvalidArgument, "card reference out of LAB range");
  }
}

CardLayout card_layout_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "card layout: expected an object");
  for (const char* key : {"rows", "cols", "key_patch", "reference"}) {
    if (!doc.contains(key)) {
      throw Error(ErrorKind::ParseError, std::string("card layout: missing field '") + key + "'");
    }
  }
  CardLayout layout;
  layout.rows = int_at(doc["rows"], "rows");
  layout.cols = int_at(doc["cols"], "cols");
  if (doc.contains("margin")) layout.margin = number_at(doc["margin"], "margin");
  const auto& key = doc["key_patch"];
  if (!key.is_array() || key.size() != 2) {
    throw Error(ErrorKind::ParseError, "key_patch: expected [row, col]");
  }
  layout.key_patch = {int_at(key[0], "key_patch[0]"), int_at(key[1], "key_patch[1]")};

  const auto& ref = doc["reference"];
  if (!ref.is_array()) throw Error(ErrorKind::ParseError, "reference: expected an array of rows");
  for (std::size_t r = 0; r < ref.size(); ++r) {
    const std::string where_row = "reference[" + std::to_string(r) + "]";
    if (!ref[r].is_array()) throw Error(ErrorKind::ParseError, where_row + ": expected an array");
    if (layout.cols >= 0 && ref[r].size() != static_cast<std::size_t>(layout.cols)) {
      throw Error(ErrorKind::ValidationError, where_row + ": expected " +
                                                  std::to_string(layout.cols) + " patches");
    }
    for (std::size_t c = 0; c < ref[r].size(); ++c) {
      const std::string where = where_row + "[" + std::to_string(c) + "]";
      const auto& t = ref[r][c];
      if (!t.is_array() || t.size() != 3) {
        throw Error(ErrorKind::ParseError, where + ": expected [L, a, b]");
      }
      layout.reference.push_back({number_at(t[0], where + "[0]"), number_at(t[1], where + "[1]"),
                                  number_at(t[2], where + "[2]")});
    }
  }
  try {
    layout.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ValidationError, std::string("card layout: ") + e.what());
  }
  return layout;
}

CardLayout load_card_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return card_layout_from_json(doc);
}

nlohmann::json to_json(const CardLayout& layout) {
  nlohmann::json ref = nlohmann::json::array();
  for (int r = 0; r < layout.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < layout.cols; ++c) {
      const LabColour& v = layout.reference_at({r, c});
      row.push_back({v.L, v.a, v.b});
    }
    ref.push_back(std::move(row));
  }
  return {{"rows", layout.rows},
          {"cols", layout.cols},
          {"margin", layout.margin},
          {"key_patch", {layout.key_patch.row, layout.key_patch.col}},
          {"reference", std::move(ref)}};
}

void CardAnnotation::validate() const {
  double sign = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 a = corners[i];
    const Point2 b = corners[(i + 1) % 4];
    const Point2 c = corners[(i + 2) % 4];
    const double z = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (!std::isfinite(z) || z == 0.0 || (sign != 0.0 && (z > 0.0) != (sign > 0.0))) {
      throw Error(ErrorKind::InvalidArgument, "card corners do not form a convex quadrilateral");
    }
    sign = z;
  }
}

double ColourDelta::max_abs() const {
  return std::max({std::abs(dL), std::abs(dA), std::abs(dB)});
}

Roi locate_patch_region(const CardAnnotation& ann, const CardLayout& layout, PatchIndex patch) {
  if (patch.row < 0 || patch.row >= layout.rows || patch.col < 0 || patch.col >= layout.cols) {
    throw Error(ErrorKind::IndexOutOfGrid, "patch (" + std::to_string(patch.row) + ", " +
                                               std::to_string(patch.col) + ") outside " +
                                               std::to_string(layout.rows) + "x" +
                                               std::to_string(layout.cols) + " grid");
  }
  const double u0 = static_cast<double>(patch.col) / layout.cols;
  const double u1 = static_cast<double>(patch.col + 1) / layout.cols;
  const double v0 = static_cast<double>(patch.row) / layout.rows;
  const double v1 = static_cast<double>(patch.row + 1) / layout.rows;
  std::array<Point2, 4> cell{card_point(ann, u0, v0), card_point(ann, u1, v0),
                             card_point(ann, u1, v1), card_point(ann, u0, v1)};
  Point2 center{};
  for (const auto& p : cell) {
    center.x += p.x / 4.0;
    center.y += p.y / 4.0;
  }
  std::vector<Point2> shrunk;
  shrunk.reserve(4);
  for (const auto& p : cell) shrunk.push_back(lerp(center, p, layout.margin));
  return Roi(std::move(shrunk));
}

LabColour measure_patch(const ImageRGB& img, const Roi& roi) {
  const RoiMask m = rasterize(roi, img.width(), img.height());
  double sl = 0.0;
  double sa = 0.0;
  double sb = 0.0;
  for (int y = 0; y < m.bounds.height; ++y) {
    for (int x = 0; x < m.bounds.width; ++x) {
      if (!m.mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(m.bounds.width) +
                  static_cast<std::size_t>(x)]) {
        continue;
      }
      const LabColour c = rgb_to_lab(img.at(m.bounds.x0 + x, m.bounds.y0 + y));
      sl += c.L;
      sa += c.a;
      sb += c.b;
    }
  }
  const double n = static_cast<double>(m.count);
  return {sl / n, sa / n, sb / n};
}

ColourDelta compute_delta(const LabColour& reference, const LabColour& observed) noexcept {
  return {reference.L - observed.L, reference.a - observed.a, reference.b - observed.b};
}

ImageRGB apply_delta(const ImageRGB& img, const ColourDelta& d) {
  if (!std::isfinite(d.dL) || !std::isfinite(d.dA) || !std::isfinite(d.dB)) {
    throw Error(ErrorKind::InvalidArgument, "colour delta must be finite");
  }
  ImageRGB out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    LabColour c = rgb_to_lab({src[i], src[i + 1], src[i + 2]});
    c = clamp_lab({c.L + d.dL, c.a + d.dA, c.b + d.dB});
    const Rgb p = lab_to_rgb(c);
    dst[i] = p.r;
    dst[i + 1] = p.g;
    dst[i + 2] = p.b;
  }
  return out;
}

ColourDelta card_delta(const ImageRGB& img, const CardAnnotation& ann, const CardLayout& layout) {
  const Roi patch = locate_patch_region(ann, layout, layout.key_patch);
  return compute_delta(layout.reference_at(layout.key_patch), measure_patch(img, patch));
}

ImageRGB normalize_by_card(const ImageRGB& img, const std::optional<CardAnnotation>& ann,
                           const CardLayout& layout) {
  if (!ann) throw Error(ErrorKind::MissingAnnotation, "colour-card corners not annotated");
  return apply_delta(img, card_delta(img, *ann, layout));
}

ChannelAffine fit_card_affine(const ImageRGB& img, const CardAnnotation& ann,
                              const CardLayout& layout) {
  const std::size_t n = static_cast<std::size_t>(layout.rows) * static_cast<std::size_t>(layout.cols);
  std::vector<LabColour> observed;
  observed.reserve(n);
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      observed.push_back(measure_patch(img, locate_patch_region(ann, layout, {r, c})));
    }
  }
  ChannelAffine fit;
  const auto channel = [](const LabColour& v, int k) { return k == 0 ? v.L : k == 1 ? v.a : v.b; };
  for (int k = 0; k < 3; ++k) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += channel(observed[i], k);
      my += channel(layout.reference[i], k);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = channel(observed[i], k) - mx;
      sxx += dx * dx;
      sxy += dx * (channel(layout.reference[i], k) - my);
    }
    const auto kk = static_cast<std::size_t>(k);
    // A single patch (or identical observations) only determines an offset.
    fit.gain[kk] = sxx > 1e-12 ? sxy / sxx : 1.0;
    fit.offset[kk] = my - fit.gain[kk] * mx;
  }
  return fit;
}

ImageRGB apply_channel_affine(const ImageRGB& img, const ChannelAffine& fit) {
  ImageRGB out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const LabColour c = rgb_to_lab({src[i], src[i + 1], src[i + 2]});
    const Rgb p = lab_to_rgb(clamp_lab({fit.gain[0] * c.L + fit.offset[0],
                                        fit.gain[1] * c.a + fit.offset[1],
                                        fit.gain[2] * c.b + fit.offset[2]}));
    dst[i] = p.r;
    dst[i + 1] = p.g;
    dst[i + 2] = p.b;
  }
  return out;
}

}  // namespace skintrial
