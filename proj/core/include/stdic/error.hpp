#pragma once

#include <stdexcept>
#include <string>

namespace stdic {

enum class ErrorCode {
  DimensionTooSmall,
  OutOfDomain,
  SizeMismatch,
  LengthMismatch,
  FlatSubset,
  Singular,
  SingularWarp,
  UnsupportedSpec,
  InvalidArgument,
  WindowOutOfRange,
  MotionTooLarge,
  NoConvergedPoints,
  EmptyAfterFilter,
  SpecLacksGradients,
  DegenerateAbscissa,
  Io,
  Parse,
};

const char* to_string(ErrorCode code) noexcept;

// Every recoverable failure in the library is reported through this type;
// code() lets callers branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stdic
