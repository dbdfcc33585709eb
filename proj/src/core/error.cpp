#include "fpc/core/error.hpp"

namespace fpc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kPointAtInfinity: return "point-at-infinity";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kEstimationFailed: return "estimation-failed";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kCheckpointMismatch: return "checkpoint-mismatch";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace fpc
