#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mpsumm {

struct AnswerText {
  std::string answer_id;
  std::string text;
  std::size_t word_count = 0;
};

struct QAThread {
  std::string thread_id;
  std::string question_subject;
  std::optional<std::string> question_content;
  std::vector<AnswerText> answers;
  std::map<std::string, std::string> metadata;

  /// Subject and content joined by one space; content omitted when absent or empty.
  std::string question() const;
};

enum class ThreadRule { kMinAnswers, kMaxLongest, kSumRange, kAvgRange };

std::string_view to_string(ThreadRule rule);

struct ThreadVerdict {
  bool accepted = true;
  std::vector<ThreadRule> rejected_rules;
};

// Thread suitability thresholds. The sum and average ranges are open intervals.
struct ThreadHeuristics {
  std::size_t min_answers = 5;
  std::size_t max_longest_words = 400;
  double sum_lower = 100.0;
  double sum_upper = 1000.0;
  double avg_lower = 50.0;
  double avg_upper = 300.0;
};

/// Number of maximal runs of non-whitespace bytes. Whitespace is the ASCII set
/// (space, \t, \n, \v, \f, \r); composed and decomposed forms of the same text
/// count alike, so no normalization pass is needed before counting.
std::size_t count_words(std::string_view text);

ThreadVerdict thread_filter(const QAThread& thread, const ThreadHeuristics& heuristics = {});

struct IngestDiagnostic {
  std::size_t line_number = 0;  // 1-based
  std::string code;             // MALFORMED_RECORD or DUPLICATE_THREAD_ID
  std::string message;
};

struct IngestOptions {
  bool strict = false;
};

struct IngestResult {
  std::vector<QAThread> threads;
  std::vector<IngestDiagnostic> diagnostics;
};

/// Parses one thread per line. Blank lines are ignored. Malformed lines are
/// skipped and reported; under strict mode the first malformed or duplicate
/// record throws. Duplicate ids outside strict mode are renamed "<id>#2", "<id>#3", ...
IngestResult ingest(std::istream& in, const IngestOptions& options = {});

/// Parses one record. Throws Error(kMalformedRecord) on schema violations.
QAThread parse_thread(std::string_view line);

/// Serializes a thread to one line (no trailing newline) in the ingest schema.
std::string serialize_thread(const QAThread& thread);

std::string verdict_record(const QAThread& thread, const ThreadVerdict& verdict);

}  // namespace mpsumm
