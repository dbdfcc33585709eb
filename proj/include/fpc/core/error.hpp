#pragma once

#include <stdexcept>
#include <string>

namespace fpc {

enum class ErrorCode {
  kInvalidArgument,
  kFormat,
  kShapeMismatch,
  kSingular,
  kPointAtInfinity,
  kDegenerate,
  kInsufficientData,
  kEstimationFailed,
  kUndefinedMetric,
  kDivergence,
  kCheckpointMismatch,
  kIo,
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fpc
