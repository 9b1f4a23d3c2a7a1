#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftdiag {

enum class ErrorCode {
  kInvalidLength,
  kWrongFamily,
  kInsufficientData,
  kDegenerateSample,
  kInvalidWidth,
  kEmptyPlan,
  kInsufficientWindows,
  kManifest,
  kShape,
  kNoSignal,
  kDegenerateTraining,
  kWrongMatrix,
  kSplit,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace shiftdiag
