#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sloppykit {

enum class ErrorCode {
  InvalidArgument,
  OutOfDomain,
  NonFinite,
  MissingAnalyticJacobian,
  DuplicateTimepoints,
  Degenerate,
  NotHurwitz,
  StepSizeUnderflow,
  NonFiniteState,
  NotSquare,
  NotPositiveDefinite,
  SingularSystem,
  DimensionMismatch,
  ZeroProbabilityCell,
  InvalidTrialCount,
  WrongKernelDimension,
  CorrectorDivergence,
  MleFailure,
  Unsupported,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error raised by library operations. The code identifies the
/// failure class; the message carries the specifics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sloppykit
