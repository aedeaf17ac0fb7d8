#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace featprobe {

enum class ErrorCode {
  kIo,
  kMalformedHeader,
  kFortranOrder,
  kUnsupportedDtype,
  kNonFinite,
  kShapeMismatch,
  kSchema,
  kInvalidParameter,
  kNonExecutable,
  kEmptyMask,
  kEmptySplit,
  kUsage,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries a code so that the CLI can emit
// machine-readable error records. `pointer` is a JSON pointer for schema and
// config errors and empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string pointer = {})
      : std::runtime_error(message), code_(code), pointer_(std::move(pointer)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  ErrorCode code_;
  std::string pointer_;
};

}  // namespace featprobe
