#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skintrial {

/// Failure categories surfaced by the library. Every thrown skintrial::Error
/// carries exactly one of these so callers can branch without string matching.
enum class ErrorKind {
  InvalidArgument,
  FileNotFound,
  DecodeError,
  IoError,
  EmptyRoi,
  ImageTooSmall,
  IndexOutOfGrid,
  MissingAnnotation,
  EmptyDescriptorSet,
  InsufficientMatches,
  NoConsensus,
  ZeroMeanImage,
  SampleTooSmall,
  ZeroVariance,
  ZeroVarianceDifferences,
  AllDifferencesZero,
  LengthMismatch,
  ZeroBaselineMean,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace skintrial
