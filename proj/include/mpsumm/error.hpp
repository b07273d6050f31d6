#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpsumm {

enum class ErrorCode {
  kMalformedRecord,
  kDuplicateThreadId,
  kEmptyCorpus,
  kUnsupportedOp,
  kProviderUnavailable,
  kDimMismatch,
  kMissingScore,
  kEmptyInput,
  kEmptySummary,
  kEmptySource,
  kNonfiniteInput,
  kNoRewards,
  kShapeMismatch,
  kIndexOutOfRange,
  kUnalignedCandidates,
  kInvalidConfig,
  kIo,
  kStage,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; code() carries the
// error identifier used in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mpsumm
