#pragma once

#include <filesystem>

#include "skintrial/image.hpp"

namespace skintrial {

/// Decodes a JPEG or PNG file into 8-bit RGB. EXIF orientation is applied, so
/// stored rows are display rows. Throws FileNotFound or DecodeError.
ImageRGB load_image(const std::filesystem::path& path);

/// Encodes by extension (.png, .jpg/.jpeg). Throws IoError.
void save_image(const std::filesystem::path& path, const ImageRGB& img);
void save_image(const std::filesystem::path& path, const ImageGray& img);

}  // namespace skintrial
