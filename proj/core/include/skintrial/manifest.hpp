#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skintrial/alignment.hpp"
#include "skintrial/card_calibration.hpp"
#include "skintrial/date.hpp"
#include "skintrial/metrics.hpp"
#include "skintrial/normalization.hpp"

namespace skintrial {

enum class Site { Cheek, Temple };
enum class Device { Smartphone, Antera };

std::string_view to_string(Site s) noexcept;
std::string_view to_string(Device d) noexcept;

/// Antera parameter names as they appear in manifests and CSV imports.
inline constexpr std::string_view kAnteraColour[] = {"L", "A", "B"};
inline constexpr std::string_view kAnteraWrinkle[] = {"wrinkle_overall_size", "wrinkle_depth",
                                                      "wrinkle_max_depth"};

struct SessionRecord {
  Date date;
  Site site = Site::Cheek;
  Device device = Device::Smartphone;
  std::filesystem::path image_path;           ///< smartphone only, absolute after loading
  std::map<std::string, double> parameters;   ///< antera only
  std::optional<CardAnnotation> card_corners;
  std::optional<Roi> roi;
};

struct VolunteerRecord {
  std::string id;
  std::vector<SessionRecord> sessions;
  std::size_t reference_session = 0;  ///< index into sessions
};

struct PipelineConfig {
  std::vector<NormalizationMethod> methods{NormalizationMethod::Original,
                                           NormalizationMethod::HistEqualY,
                                           NormalizationMethod::Clahe,
                                           NormalizationMethod::ColourCard};
  ClaheSettings clahe;
  double ratio_threshold = kDefaultRatioThreshold;
  std::uint64_t seed = 42;
  double alpha = 0.05;
  TransformKind transform = TransformKind::Similarity;
  std::size_t max_keypoints = 1000;
  unsigned workers = 0;  ///< 0 = one per hardware thread
};

struct Manifest {
  std::string trial_id;
  std::vector<VolunteerRecord> volunteers;
  std::filesystem::path card_layout_path;
  std::optional<CardLayout> card_layout;  ///< loaded from card_layout_path when present
  PipelineConfig config;
};

/// Parses a manifest document. Relative paths resolve against `base_dir`.
/// Throws ParseError (with line and field context) or ValidationError.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

/// Reads, parses and validates a manifest file, including an optional "antera_csv" import.
Manifest load_manifest(const std::filesystem::path& path);

/// Checks every manifest invariant; throws ValidationError naming the first violation.
void validate(const Manifest& m);

/// Serialized form understood by parse_manifest; paths are written relative to `base_dir`.
nlohmann::json to_json(const Manifest& m, const std::filesystem::path& base_dir);

/// Adds Antera rows from CSV text with the header volunteer,date,site,parameter,value.
void import_antera_csv(Manifest& m, std::string_view csv_text);

/// Minimal RFC-4180 reader: rows of fields, quoted fields may contain commas, quotes, newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace skintrial
