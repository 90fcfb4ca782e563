#pragma once

#include <stdexcept>
#include <string>

namespace gic {

enum class ErrorCode {
  kNotSkew,
  kMalformedSe3,
  kNearPiRotation,
  kNotOrthonormal,
  kFrameMismatch,
  kDimensionMismatch,
  kInvalidModel,
  kSingularJacobian,
  kNumericalBlowup,
  kNonFiniteInput,
  kDegenerate,
  kGradientMismatch,
  kSchemaVersionMismatch,
  kCorruptPayload,
  kExpertFailureRate,
  kMissingPolicy,
  kInvalidArgument,
  kBindFailure,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the episode loop, the CLI) can map it to a policy without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSkew: return "NotSkew";
    case ErrorCode::kMalformedSe3: return "MalformedSe3";
    case ErrorCode::kNearPiRotation: return "NearPiRotation";
    case ErrorCode::kNotOrthonormal: return "NotOrthonormal";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidModel: return "InvalidModel";
    case ErrorCode::kSingularJacobian: return "SingularJacobian";
    case ErrorCode::kNumericalBlowup: return "NumericalBlowup";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kGradientMismatch: return "GradientMismatch";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kCorruptPayload: return "CorruptPayload";
    case ErrorCode::kExpertFailureRate: return "ExpertFailureRate";
    case ErrorCode::kMissingPolicy: return "MissingPolicy";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBindFailure: return "BindFailure";
  }
  return "Unknown";
}

}  // namespace gic
