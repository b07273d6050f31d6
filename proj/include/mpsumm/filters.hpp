#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpsumm/clusterer.hpp"
#include "mpsumm/providers.hpp"

namespace mpsumm {

enum class ExampleRule {
  kCompression,
  kInputLen,
  kSummaryLen,
  kContradiction,
  kMathSymbols,
  kLongToken,
  kLinks,
  kEntityCoverage,
};

inline constexpr std::size_t kExampleRuleCount = 8;
inline constexpr std::array<ExampleRule, kExampleRuleCount> kAllExampleRules = {
    ExampleRule::kCompression,   ExampleRule::kInputLen,   ExampleRule::kSummaryLen,
    ExampleRule::kContradiction, ExampleRule::kMathSymbols, ExampleRule::kLongToken,
    ExampleRule::kLinks,         ExampleRule::kEntityCoverage,
};

std::string_view to_string(ExampleRule rule);

struct FilterThresholds {
  double min_compression = 4.0;     // source/summary tokens below this fails
  std::size_t input_cap = 1100;     // source tokens above this fails
  std::size_t summary_cap = 250;    // summary tokens above this fails
  std::size_t long_token = 50;      // any token longer than this (code points) fails
  std::size_t math_symbols = 10;    // more than this many '+' (or '=') fails
  std::size_t summary_links = 1;    // at least this many URLs in the summary fails
  std::size_t source_links = 2;     // at least this many URLs in the source fails
};

struct FilterVerdict {
  bool accepted = true;
  std::vector<ExampleRule> violations;  // in kAllExampleRules order
};

/// True for tokens starting with http://, https:// or www. (case-insensitive)
/// once surrounding punctuation is stripped.
bool is_url_token(std::string_view token);
std::size_t count_urls(std::string_view text);

/// Evaluates every rule. "Source" is the remaining answer sentences; the
/// symbol count covers question, source and summary (i.e. all answer text);
/// the long-token rule scans all three. The contradiction premise for each
/// bullet is the source sentence with the highest entailment probability.
FilterVerdict filter_example(const SummaryExample& example, Provider& provider,
                             const FilterThresholds& thresholds = {});

struct FilterReport {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::array<std::size_t, kExampleRuleCount> removed_by_rule{};

  std::size_t rejected() const { return total - accepted; }
  /// accepted / total; 0 for an empty report.
  double survival_rate() const;
  std::size_t count(ExampleRule rule) const { return removed_by_rule[static_cast<std::size_t>(rule)]; }

  std::string table() const;
  std::string record() const;  // one JSON object, no trailing newline
};

FilterReport filter_report(std::span<const FilterVerdict> verdicts);

}  // namespace mpsumm
