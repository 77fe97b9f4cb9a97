#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bearing {

enum class ErrorCode {
  SelfLoop,
  DuplicateEdge,
  VertexOutOfRange,
  DegenerateVector,
  CoincidentPoints,
  DegenerateConfiguration,
  DimensionMismatch,
  MissingBearing,
  NonUnitBearing,
  AntisymmetryViolation,
  DisconnectedGraph,
  EmptyFollowerSet,
  SingularFollowerBlock,
  DegenerateTarget,
  TooFewAnchors,
  SizeMismatch,
  ParseError,
  ValidationError,
  GenerationFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::VertexOutOfRange: return "VertexOutOfRange";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingBearing: return "MissingBearing";
    case ErrorCode::NonUnitBearing: return "NonUnitBearing";
    case ErrorCode::AntisymmetryViolation: return "AntisymmetryViolation";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::EmptyFollowerSet: return "EmptyFollowerSet";
    case ErrorCode::SingularFollowerBlock: return "SingularFollowerBlock";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::TooFewAnchors: return "TooFewAnchors";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bearing
