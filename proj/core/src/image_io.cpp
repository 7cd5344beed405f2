#include "skintrial/image_io.hpp"

#include <array>
#include <fstream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

enum class Format { Jpeg, Png, Unknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  const auto got = in.gcount();
  if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) return Format::Jpeg;
  constexpr std::array<unsigned char, 8> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (got == 8 && magic == png) return Format::Png;
  return Format::Unknown;
}

void write_mat(const std::filesystem::path& path, const cv::Mat& mat) {
  const std::string ext = path.extension().string();
  if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") {
    throw Error(ErrorKind::IoError, "unsupported output extension: " + path.string());
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
  if (!ok) throw Error(ErrorKind::IoError, "could not write " + path.string());
}

}  // namespace

ImageRGB load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::FileNotFound, path.string());
  }
  if (sniff(path) == Format::Unknown) {
    throw Error(ErrorKind::DecodeError, path.string() + ": not a JPEG or PNG file");
  }
  cv::Mat bgr;
  try {
    // IMREAD_COLOR honours the EXIF orientation tag.
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::DecodeError, path.string() + ": " + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorKind::DecodeError, path.string() + ": could not decode image");
  }
  std::vector<std::uint8_t> data(static_cast<std::size_t>(bgr.rows) *
                                 static_cast<std::size_t>(bgr.cols) * 3);
  std::size_t k = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      data[k++] = row[x][2];
      data[k++] = row[x][1];
      data[k++] = row[x][0];
    }
  }
  return {bgr.cols, bgr.rows, std::move(data)};
}

void save_image(const std::filesystem::path& path, const ImageRGB& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.at(x, y);
      row[x] = cv::Vec3b(c.b, c.g, c.r);
    }
  }
  write_mat(path, bgr);
}

void save_image(const std::filesystem::path& path, const ImageGray& img) {
  cv::Mat gray(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) row[x] = img(x, y);
  }
  write_mat(path, gray);
}

}  // namespace skintrial
