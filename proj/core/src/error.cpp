#include "stdic/error.hpp"

namespace stdic {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::FlatSubset: return "FlatSubset";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::SingularWarp: return "SingularWarp";
    case ErrorCode::UnsupportedSpec: return "UnsupportedSpec";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::MotionTooLarge: return "MotionTooLarge";
    case ErrorCode::NoConvergedPoints: return "NoConvergedPoints";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::SpecLacksGradients: return "SpecLacksGradients";
    case ErrorCode::DegenerateAbscissa: return "DegenerateAbscissa";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace stdic
