#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace uglad {

enum class ErrorCode {
  NotPositiveDefinite,
  NoConvergence,
  ShapeMismatch,
  LengthMismatch,
  DimensionMismatch,
  DegenerateData,
  EmptyColumn,
  MissingData,
  TooFewRows,
  DegenerateLabels,
  ParseError,
  IoError,
  InvalidArgument,
  InvalidThreshold,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
/// `feature` is set when the failure can be attributed to one data column.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> feature = std::nullopt)
      : std::runtime_error(message), code_(code), feature_(feature) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> feature() const noexcept { return feature_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> feature_;
};

}  // namespace uglad
