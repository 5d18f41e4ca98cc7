#include "sloppykit/error.hpp"

namespace sloppykit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingAnalyticJacobian: return "MissingAnalyticJacobian";
    case ErrorCode::DuplicateTimepoints: return "DuplicateTimepoints";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroProbabilityCell: return "ZeroProbabilityCell";
    case ErrorCode::InvalidTrialCount: return "InvalidTrialCount";
    case ErrorCode::WrongKernelDimension: return "WrongKernelDimension";
    case ErrorCode::CorrectorDivergence: return "CorrectorDivergence";
    case ErrorCode::MleFailure: return "MleFailure";
    case ErrorCode::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sloppykit
