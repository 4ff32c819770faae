#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualview {

enum class ErrorCode {
  kIo,
  kUnsupportedFormat,
  kBadMagic,
  kTruncated,
  kDimensionOverflow,
  kDimensionMismatch,
  kInvalidArgument,
  kSingularHomography,
  kDegenerateConfiguration,
  kTooManyLevels,
  kEmptyMask,
  kRasterTooSmall,
  kInsufficientSources,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every fallible operation in the library. The code lets
/// callers tell failure classes apart without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dualview
