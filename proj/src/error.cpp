#include "mpsumm/error.hpp"

#include <cstdio>

#include "mpsumm/hash.hpp"

namespace mpsumm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::kDuplicateThreadId: return "DUPLICATE_THREAD_ID";
    case ErrorCode::kEmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::kUnsupportedOp: return "UNSUPPORTED_OP";
    case ErrorCode::kProviderUnavailable: return "PROVIDER_UNAVAILABLE";
    case ErrorCode::kDimMismatch: return "DIM_MISMATCH";
    case ErrorCode::kMissingScore: return "MISSING_SCORE";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kEmptySummary: return "EMPTY_SUMMARY";
    case ErrorCode::kEmptySource: return "EMPTY_SOURCE";
    case ErrorCode::kNonfiniteInput: return "NONFINITE_INPUT";
    case ErrorCode::kNoRewards: return "NO_REWARDS";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kUnalignedCandidates: return "UNALIGNED_CANDIDATES";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kStage: return "STAGE_FAILED";
  }
  return "UNKNOWN";
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string content_key(std::string_view text) { return hex64(fnv1a64(text)); }

std::string content_key(std::string_view first, std::string_view second) {
  std::string joined;
  joined.reserve(first.size() + second.size() + 1);
  joined.append(first);
  joined.push_back('\x1f');
  joined.append(second);
  return hex64(fnv1a64(joined));
}

}  // namespace mpsumm
