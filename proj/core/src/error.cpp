#include "shiftdiag/error.hpp"

namespace shiftdiag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidLength: return "invalid-length";
    case ErrorCode::kWrongFamily: return "wrong-family";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateSample: return "degenerate-sample";
    case ErrorCode::kInvalidWidth: return "invalid-width";
    case ErrorCode::kEmptyPlan: return "empty-plan";
    case ErrorCode::kInsufficientWindows: return "insufficient-windows";
    case ErrorCode::kManifest: return "manifest";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kNoSignal: return "no-signal";
    case ErrorCode::kDegenerateTraining: return "degenerate-training";
    case ErrorCode::kWrongMatrix: return "wrong-matrix";
    case ErrorCode::kSplit: return "split";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace shiftdiag
