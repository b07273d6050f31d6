#include "mpsumm/filters.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mpsumm/corpus.hpp"

namespace mpsumm {

namespace {

std::string join_lines(std::span<const std::string> parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back('\n');
    out += parts[i];
  }
  return out;
}

std::size_t longest_token(std::string_view text) {
  std::size_t best = 0;
  for (auto tok : whitespace_tokens(text)) best = std::max(best, code_points(tok));
  return best;
}

}  // namespace

std::string_view to_string(ExampleRule rule) {
  switch (rule) {
    case ExampleRule::kCompression: return "COMPRESSION";
    case ExampleRule::kInputLen: return "INPUT_LEN";
    case ExampleRule::kSummaryLen: return "SUMMARY_LEN";
    case ExampleRule::kContradiction: return "CONTRADICTION";
    case ExampleRule::kMathSymbols: return "MATH_SYMBOLS";
    case ExampleRule::kLongToken: return "LONG_TOKEN";
    case ExampleRule::kLinks: return "LINKS";
    case ExampleRule::kEntityCoverage: return "ENTITY_COVERAGE";
  }
  return "UNKNOWN";
}

bool is_url_token(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b])) != 0) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1])) != 0) --e;
  std::string core;
  for (std::size_t i = b; i < e; ++i) core.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(token[i]))));
  return core.rfind("http://", 0) == 0 || core.rfind("https://", 0) == 0 || core.rfind("www.", 0) == 0;
}

std::size_t count_urls(std::string_view text) {
  std::size_t n = 0;
  for (auto tok : whitespace_tokens(text)) n += is_url_token(tok) ? 1 : 0;
  return n;
}

FilterVerdict filter_example(const SummaryExample& e, Provider& provider, const FilterThresholds& th) {
  std::vector<std::string> source;
  source.reserve(e.source_sentences.size());
  for (const auto& s : e.source_sentences) source.push_back(s.text);
  const std::string source_text = join_lines(source);
  const std::string summary_text = join_lines(e.bullets);

  const std::size_t source_tokens = count_words(source_text);
  const std::size_t summary_tokens = count_words(summary_text);

  std::vector<ExampleRule> v;

  if (summary_tokens > 0 &&
      static_cast<double>(source_tokens) / static_cast<double>(summary_tokens) < th.min_compression) {
    v.push_back(ExampleRule::kCompression);
  }
  if (source_tokens > th.input_cap) v.push_back(ExampleRule::kInputLen);
  if (summary_tokens > th.summary_cap) v.push_back(ExampleRule::kSummaryLen);

  if (!source.empty()) {
    const bool contradicted = std::any_of(e.bullets.begin(), e.bullets.end(), [&](const std::string& bullet) {
      NliJudgment best;
      bool have = false;
      for (const auto& premise : source) {
        const NliJudgment j = provider.nli(premise, bullet);
        if (!have || j.entail > best.entail) {
          best = j;
          have = true;
        }
      }
      return best.argmax() == NliJudgment::Label::kContradict;
    });
    if (contradicted) v.push_back(ExampleRule::kContradiction);
  }

  const std::string all_text = e.question + "\n" + source_text + "\n" + summary_text;
  const auto plus = static_cast<std::size_t>(std::count(all_text.begin(), all_text.end(), '+'));
  const auto equals = static_cast<std::size_t>(std::count(all_text.begin(), all_text.end(), '='));
  if (plus > th.math_symbols || equals > th.math_symbols) v.push_back(ExampleRule::kMathSymbols);

  if (longest_token(all_text) > th.long_token) v.push_back(ExampleRule::kLongToken);

  if (count_urls(summary_text) >= th.summary_links || count_urls(source_text) >= th.source_links) {
    v.push_back(ExampleRule::kLinks);
  }

  const auto summary_entities = provider.entities(summary_text);
  if (!summary_entities.empty()) {
    const auto source_entities = provider.entities(source_text);
    const bool covered = std::includes(source_entities.begin(), source_entities.end(), summary_entities.begin(),
                                       summary_entities.end());
    if (!covered) v.push_back(ExampleRule::kEntityCoverage);
  }

  FilterVerdict verdict;
  verdict.violations = std::move(v);
  verdict.accepted = verdict.violations.empty();
  return verdict;
}

double FilterReport::survival_rate() const {
  return total == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(total);
}

std::string FilterReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(18) << "rule" << std::right << std::setw(10) << "removed" << '\n';
  for (auto rule : kAllExampleRules) {
    os << std::left << std::setw(18) << to_string(rule) << std::right << std::setw(10) << count(rule) << '\n';
  }
  os << std::left << std::setw(18) << "examples" << std::right << std::setw(10) << total << '\n';
  os << std::left << std::setw(18) << "accepted" << std::right << std::setw(10) << accepted << '\n';
  os << std::left << std::setw(18) << "survival" << std::right << std::setw(10) << std::fixed
     << std::setprecision(4) << survival_rate() << '\n';
  return os.str();
}

std::string FilterReport::record() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["accepted"] = accepted;
  j["rejected"] = rejected();
  j["survival_rate"] = survival_rate();
  nlohmann::ordered_json per_rule = nlohmann::ordered_json::object();
  for (auto rule : kAllExampleRules) per_rule[std::string(to_string(rule))] = count(rule);
  j["removed_by_rule"] = std::move(per_rule);
  return j.dump();
}

FilterReport filter_report(std::span<const FilterVerdict> verdicts) {
  FilterReport r;
  r.total = verdicts.size();
  for (const auto& v : verdicts) {
    if (v.accepted) ++r.accepted;
    for (auto rule : v.violations) ++r.removed_by_rule[static_cast<std::size_t>(rule)];
  }
  return r;
}

}  // namespace mpsumm
