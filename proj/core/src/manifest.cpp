#include "skintrial/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "skintrial/error.hpp"

namespace skintrial {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Site s) noexcept { return s == Site::Cheek ? "cheek" : "temple"; }

std::string_view to_string(Device d) noexcept {
  return d == Device::Smartphone ? "smartphone" : "antera";
}

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ParseError, where + ": " + what);
}

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::ValidationError, what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) parse_fail(where, "expected a string");
  return j.get<std::string>();
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where, "expected a number");
  return j.get<double>();
}

Point2 as_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) parse_fail(where, "expected [x, y]");
  return {as_number(j[0], where + "[0]"), as_number(j[1], where + "[1]")};
}

std::vector<Point2> as_points(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array of [x, y] points");
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < j.size(); ++i) {
    pts.push_back(as_point(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return pts;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

SessionRecord parse_session(const json& j, const fs::path& base, const std::string& where) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  SessionRecord s;
  const std::string date = as_string(field(j, "date", where), where + ".date");
  const auto d = Date::parse(date);
  if (!d) parse_fail(where + ".date", "'" + date + "' is not a YYYY-MM-DD date");
  s.date = *d;

  const std::string site = as_string(field(j, "site", where), where + ".site");
  if (site == "cheek") {
    s.site = Site::Cheek;
  } else if (site == "temple") {
    s.site = Site::Temple;
  } else {
    parse_fail(where + ".site", "expected 'cheek' or 'temple'");
  }

  const std::string device = as_string(field(j, "device", where), where + ".device");
  if (device == "smartphone") {
    s.device = Device::Smartphone;
  } else if (device == "antera") {
    s.device = Device::Antera;
  } else {
    parse_fail(where + ".device", "expected 'smartphone' or 'antera'");
  }

  if (const auto it = j.find("image"); it != j.end()) {
    s.image_path = resolve(base, as_string(*it, where + ".image"));
  }
  if (const auto it = j.find("parameters"); it != j.end()) {
    if (!it->is_object()) parse_fail(where + ".parameters", "expected an object");
    for (const auto& [k, v] : it->items()) {
      s.parameters[k] = as_number(v, where + ".parameters." + k);
    }
  }
  if (const auto it = j.find("card_corners"); it != j.end()) {
    const auto pts = as_points(*it, where + ".card_corners");
    if (pts.size() != 4) parse_fail(where + ".card_corners", "expected 4 corners");
    s.card_corners = CardAnnotation{{pts[0], pts[1], pts[2], pts[3]}};
  }
  if (const auto it = j.find("roi"); it != j.end()) {
    try {
      s.roi = Roi(as_points(*it, where + ".roi"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ParseError) throw;
      invalid(where + ".roi: " + e.what());
    }
  }
  return s;
}

void parse_config(const json& j, PipelineConfig& c) {
  const std::string where = "config";
  if (!j.is_object()) parse_fail(where, "expected an object");
  if (const auto it = j.find("methods"); it != j.end()) {
    if (!it->is_array()) parse_fail(where + ".methods", "expected an array");
    c.methods.clear();
    for (const auto& m : *it) {
      const std::string name = as_string(m, where + ".methods");
      const auto method = parse_normalization_method(name);
      if (!method) parse_fail(where + ".methods", "unknown method '" + name + "'");
      c.methods.push_back(*method);
    }
  }
  if (const auto it = j.find("clahe"); it != j.end()) {
    if (!it->is_object()) parse_fail(where + ".clahe", "expected an object");
    if (it->contains("tiles_x")) c.clahe.tiles_x = static_cast<int>(as_number((*it)["tiles_x"], "config.clahe.tiles_x"));
    if (it->contains("tiles_y")) c.clahe.tiles_y = static_cast<int>(as_number((*it)["tiles_y"], "config.clahe.tiles_y"));
    if (it->contains("clip_factor")) c.clahe.clip_factor = as_number((*it)["clip_factor"], "config.clahe.clip_factor");
  }
  if (j.contains("ratio_threshold")) c.ratio_threshold = as_number(j["ratio_threshold"], "config.ratio_threshold");
  if (j.contains("alpha")) c.alpha = as_number(j["alpha"], "config.alpha");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) parse_fail("config.seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("max_keypoints")) {
    if (!j["max_keypoints"].is_number_unsigned()) parse_fail("config.max_keypoints", "expected a non-negative integer");
    c.max_keypoints = j["max_keypoints"].get<std::size_t>();
  }
  if (j.contains("workers")) {
    if (!j["workers"].is_number_unsigned()) parse_fail("config.workers", "expected a non-negative integer");
    c.workers = j["workers"].get<unsigned>();
  }
  if (j.contains("transform")) {
    const std::string t = as_string(j["transform"], "config.transform");
    if (t == "similarity") {
      c.transform = TransformKind::Similarity;
    } else if (t == "affine") {
      c.transform = TransformKind::Affine;
    } else {
      parse_fail("config.transform", "expected 'similarity' or 'affine'");
    }
  }
}

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

bool uses_card(const PipelineConfig& c) {
  for (auto m : c.methods) {
    if (m == NormalizationMethod::ColourCard) return true;
  }
  return false;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Manifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "manifest: " + line_context(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail("manifest", "expected an object");

  Manifest m;
  m.trial_id = as_string(field(doc, "trial_id", "manifest"), "trial_id");
  if (const auto it = doc.find("card_layout"); it != doc.end()) {
    m.card_layout_path = resolve(base_dir, as_string(*it, "card_layout"));
  }
  if (const auto it = doc.find("config"); it != doc.end()) parse_config(*it, m.config);

  const json& vols = field(doc, "volunteers", "manifest");
  if (!vols.is_array()) parse_fail("volunteers", "expected an array");
  for (std::size_t v = 0; v < vols.size(); ++v) {
    const std::string where = "volunteers[" + std::to_string(v) + "]";
    const json& jv = vols[v];
    if (!jv.is_object()) parse_fail(where, "expected an object");
    VolunteerRecord rec;
    rec.id = as_string(field(jv, "id", where), where + ".id");
    if (const auto it = jv.find("reference_session"); it != jv.end()) {
      if (!it->is_number_unsigned()) parse_fail(where + ".reference_session", "expected a session index");
      rec.reference_session = it->get<std::size_t>();
    }
    const json& sessions = field(jv, "sessions", where);
    if (!sessions.is_array()) parse_fail(where + ".sessions", "expected an array");
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      rec.sessions.push_back(
          parse_session(sessions[s], base_dir, where + ".sessions[" + std::to_string(s) + "]"));
    }
    m.volunteers.push_back(std::move(rec));
  }

  if (const auto it = doc.find("antera_csv"); it != doc.end()) {
    const fs::path csv = resolve(base_dir, as_string(*it, "antera_csv"));
    if (!fs::is_regular_file(csv)) invalid("antera_csv: file not found: " + csv.string());
    import_antera_csv(m, read_text(csv));
  }

  if (!m.card_layout_path.empty() && fs::is_regular_file(m.card_layout_path)) {
    try {
      m.card_layout = load_card_layout(m.card_layout_path);
    } catch (const Error& e) {
      invalid("card_layout: " + std::string(e.what()));
    }
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::FileNotFound, path.string());
  Manifest m = parse_manifest(read_text(path), path.parent_path());
  validate(m);
  return m;
}

void validate(const Manifest& m) {
  const PipelineConfig& c = m.config;
  if (c.methods.empty()) invalid("config.methods: at least one method is required");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) invalid("config.alpha: must be in (0, 1)");
  if (!(c.ratio_threshold > 0.0 && c.ratio_threshold <= 1.0)) {
    invalid("config.ratio_threshold: must be in (0, 1]");
  }
  if (c.clahe.tiles_x < 1 || c.clahe.tiles_y < 1) invalid("config.clahe: tiles must be >= 1");
  if (!(c.clahe.clip_factor > 0.0)) invalid("config.clahe.clip_factor: must be positive");
  if (c.max_keypoints < 8) invalid("config.max_keypoints: must be at least 8");

  const bool card = uses_card(c);
  if (card) {
    if (m.card_layout_path.empty()) invalid("card_layout: required by the card method");
    if (!fs::is_regular_file(m.card_layout_path)) {
      invalid("card_layout: file not found: " + m.card_layout_path.string());
    }
    if (!m.card_layout) invalid("card_layout: not loaded");
  }

  std::set<std::string> ids;
  for (const auto& v : m.volunteers) {
    const std::string who = "volunteer '" + v.id + "'";
    if (v.id.empty()) invalid("volunteer id must not be empty");
    if (!ids.insert(v.id).second) invalid("duplicate volunteer id '" + v.id + "'");
    if (v.sessions.empty()) invalid(who + ": no sessions");

    std::set<std::tuple<Date, Site, Device>> seen;
    for (std::size_t i = 0; i < v.sessions.size(); ++i) {
      const SessionRecord& s = v.sessions[i];
      const std::string where = who + " session " + std::to_string(i);
      if (!seen.insert({s.date, s.site, s.device}).second) {
        invalid(where + ": duplicate " + std::string(to_string(s.device)) + " " +
                std::string(to_string(s.site)) + " record on " + s.date.iso());
      }
      if (s.device == Device::Smartphone) {
        if (s.image_path.empty()) invalid(where + ": smartphone session without image");
        if (!s.parameters.empty()) invalid(where + ": smartphone session with parameters");
        if (!fs::is_regular_file(s.image_path)) {
          invalid(where + ": image not found: " + s.image_path.string());
        }
        if (card && s.site == Site::Cheek && !s.card_corners) {
          invalid(where + ": card_corners required by the card method");
        }
      } else {
        if (!s.image_path.empty()) invalid(where + ": antera session with image");
        if (s.parameters.empty()) invalid(where + ": antera session without parameters");
      }
      if (s.card_corners) {
        try {
          s.card_corners->validate();
        } catch (const Error& e) {
          invalid(where + ": " + e.what());
        }
      }
    }

    if (v.reference_session >= v.sessions.size()) invalid(who + ": reference_session out of range");
    const SessionRecord& ref = v.sessions[v.reference_session];
    if (ref.device != Device::Smartphone) invalid(who + ": reference session must be a smartphone image");
    for (Site site : {Site::Cheek, Site::Temple}) {
      bool found = false;
      for (const auto& s : v.sessions) {
        if (s.device == Device::Smartphone && s.site == site && s.date == ref.date && s.roi) {
          found = true;
        }
      }
      if (!found) {
        invalid(who + ": reference date " + ref.date.iso() + " lacks a " +
                std::string(to_string(site)) + " image with an roi");
      }
    }
  }
}

json to_json(const Manifest& m, const fs::path& base_dir) {
  const auto rel = [&](const fs::path& p) {
    return p.lexically_relative(base_dir).generic_string();
  };
  const auto points = [](std::span<const Point2> pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x, p.y});
    return arr;
  };

  json doc;
  doc["trial_id"] = m.trial_id;
  if (!m.card_layout_path.empty()) doc["card_layout"] = rel(m.card_layout_path);

  json cfg;
  cfg["methods"] = json::array();
  for (auto method : m.config.methods) cfg["methods"].push_back(std::string(to_string(method)));
  cfg["clahe"] = {{"tiles_x", m.config.clahe.tiles_x},
                  {"tiles_y", m.config.clahe.tiles_y},
                  {"clip_factor", m.config.clahe.clip_factor}};
  cfg["ratio_threshold"] = m.config.ratio_threshold;
  cfg["seed"] = m.config.seed;
  cfg["alpha"] = m.config.alpha;
  cfg["transform"] = std::string(to_string(m.config.transform));
  cfg["max_keypoints"] = m.config.max_keypoints;
  cfg["workers"] = m.config.workers;
  doc["config"] = cfg;

  doc["volunteers"] = json::array();
  for (const auto& v : m.volunteers) {
    json jv;
    jv["id"] = v.id;
    jv["reference_session"] = v.reference_session;
    jv["sessions"] = json::array();
    for (const auto& s : v.sessions) {
      json js;
      js["date"] = s.date.iso();
      js["site"] = std::string(to_string(s.site));
      js["device"] = std::string(to_string(s.device));
      if (!s.image_path.empty()) js["image"] = rel(s.image_path);
      if (!s.parameters.empty()) js["parameters"] = s.parameters;
      if (s.card_corners) js["card_corners"] = points(s.card_corners->corners);
      if (s.roi) js["roi"] = points(s.roi->vertices());
      jv["sessions"].push_back(js);
    }
    doc["volunteers"].push_back(jv);
  }
  return doc;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += ch;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, "csv: unterminated quoted field");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

void import_antera_csv(Manifest& m, std::string_view csv_text) {
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) return;
  const std::vector<std::string> header{"volunteer", "date", "site", "parameter", "value"};
  if (rows[0] != header) {
    throw Error(ErrorKind::ParseError, "antera csv: header must be volunteer,date,site,parameter,value");
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string where = "antera csv line " + std::to_string(r + 1);
    const auto& row = rows[r];
    if (row.size() != 5) parse_fail(where, "expected 5 fields");
    const auto date = Date::parse(row[1]);
    if (!date) parse_fail(where, "bad date '" + row[1] + "'");
    Site site;
    if (row[2] == "cheek") {
      site = Site::Cheek;
    } else if (row[2] == "temple") {
      site = Site::Temple;
    } else {
      parse_fail(where, "site must be cheek or temple");
    }
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(row[4], &used);
      if (used != row[4].size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      parse_fail(where, "value '" + row[4] + "' is not a number");
    }

    VolunteerRecord* vol = nullptr;
    for (auto& v : m.volunteers) {
      if (v.id == row[0]) vol = &v;
    }
    if (!vol) invalid(where + ": unknown volunteer '" + row[0] + "'");
    SessionRecord* rec = nullptr;
    for (auto& s : vol->sessions) {
      if (s.device == Device::Antera && s.site == site && s.date == *date) rec = &s;
    }
    if (!rec) {
      SessionRecord s;
      s.date = *date;
      s.site = site;
      s.device = Device::Antera;
      vol->sessions.push_back(std::move(s));
      rec = &vol->sessions.back();
    }
    rec->parameters[row[3]] = value;
  }
}

}  // namespace skintrial
