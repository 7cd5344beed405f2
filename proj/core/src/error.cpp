#include "skintrial/error.hpp"

namespace skintrial {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyRoi: return "EmptyRoi";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::IndexOutOfGrid: return "IndexOutOfGrid";
    case ErrorKind::MissingAnnotation: return "MissingAnnotation";
    case ErrorKind::EmptyDescriptorSet: return "EmptyDescriptorSet";
    case ErrorKind::InsufficientMatches: return "InsufficientMatches";
    case ErrorKind::NoConsensus: return "NoConsensus";
    case ErrorKind::ZeroMeanImage: return "ZeroMeanImage";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::ZeroVarianceDifferences: return "ZeroVarianceDifferences";
    case ErrorKind::AllDifferencesZero: return "AllDifferencesZero";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroBaselineMean: return "ZeroBaselineMean";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace skintrial
