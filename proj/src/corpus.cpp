#include "mpsumm/corpus.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "mpsumm/error.hpp"

namespace mpsumm {

namespace {

using json = nlohmann::ordered_json;

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

const json& require_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kMalformedRecord, std::string("missing \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require_field(obj, key);
  if (!v.is_string()) throw Error(ErrorCode::kMalformedRecord, std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string_view to_string(ThreadRule rule) {
  switch (rule) {
    case ThreadRule::kMinAnswers: return "MIN_ANSWERS";
    case ThreadRule::kMaxLongest: return "MAX_LONGEST";
    case ThreadRule::kSumRange: return "SUM_RANGE";
    case ThreadRule::kAvgRange: return "AVG_RANGE";
  }
  return "UNKNOWN";
}

std::string QAThread::question() const {
  if (question_content && !question_content->empty()) {
    return question_subject + " " + *question_content;
  }
  return question_subject;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

ThreadVerdict thread_filter(const QAThread& thread, const ThreadHeuristics& h) {
  ThreadVerdict verdict;
  const std::size_t n = thread.answers.size();
  std::size_t longest = 0;
  std::size_t sum = 0;
  for (const auto& a : thread.answers) {
    longest = std::max(longest, a.word_count);
    sum += a.word_count;
  }
  const double total = static_cast<double>(sum);
  const double mean = n == 0 ? 0.0 : total / static_cast<double>(n);

  if (n < h.min_answers) verdict.rejected_rules.push_back(ThreadRule::kMinAnswers);
  if (longest > h.max_longest_words) verdict.rejected_rules.push_back(ThreadRule::kMaxLongest);
  if (!(total > h.sum_lower && total < h.sum_upper)) verdict.rejected_rules.push_back(ThreadRule::kSumRange);
  if (!(mean > h.avg_lower && mean < h.avg_upper)) verdict.rejected_rules.push_back(ThreadRule::kAvgRange);
  verdict.accepted = verdict.rejected_rules.empty();
  return verdict;
}

QAThread parse_thread(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw Error(ErrorCode::kMalformedRecord, "record is not an object");

  QAThread t;
  t.thread_id = require_string(rec, "id");
  if (t.thread_id.empty()) throw Error(ErrorCode::kMalformedRecord, "empty \"id\"");
  t.question_subject = require_string(rec, "subject");
  if (auto it = rec.find("content"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::kMalformedRecord, "\"content\" must be a string or null");
    t.question_content = it->get<std::string>();
  }
  const json& answers = require_field(rec, "answers");
  if (!answers.is_array()) throw Error(ErrorCode::kMalformedRecord, "\"answers\" must be an array");
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const json& a = answers[i];
    if (!a.is_object()) throw Error(ErrorCode::kMalformedRecord, "answer is not an object");
    AnswerText answer;
    answer.text = require_string(a, "text");
    if (auto it = a.find("id"); it != a.end()) {
      if (!it->is_string()) throw Error(ErrorCode::kMalformedRecord, "answer \"id\" must be a string");
      answer.answer_id = it->get<std::string>();
    } else {
      answer.answer_id = t.thread_id + "-a" + std::to_string(i);
    }
    answer.word_count = count_words(answer.text);
    t.answers.push_back(std::move(answer));
  }
  for (const auto& [key, value] : rec.items()) {
    if (key == "id" || key == "subject" || key == "content" || key == "answers") continue;
    t.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return t;
}

std::string serialize_thread(const QAThread& t) {
  json rec;
  rec["id"] = t.thread_id;
  rec["subject"] = t.question_subject;
  rec["content"] = t.question_content ? json(*t.question_content) : json(nullptr);
  json answers = json::array();
  for (const auto& a : t.answers) answers.push_back({{"id", a.answer_id}, {"text", a.text}});
  rec["answers"] = std::move(answers);
  for (const auto& [key, value] : t.metadata) rec[key] = value;
  return rec.dump();
}

std::string verdict_record(const QAThread& thread, const ThreadVerdict& verdict) {
  json rules = json::array();
  for (auto r : verdict.rejected_rules) rules.push_back(std::string(to_string(r)));
  json rec;
  rec["id"] = thread.thread_id;
  rec["accepted"] = verdict.accepted;
  rec["rules"] = std::move(rules);
  return rec.dump();
}

IngestResult ingest(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return is_space(c); })) continue;
    QAThread thread;
    try {
      thread = parse_thread(line);
    } catch (const Error& e) {
      const std::string msg = "line " + std::to_string(line_number) + ": " + e.what();
      if (options.strict) throw Error(ErrorCode::kMalformedRecord, msg);
      result.diagnostics.push_back({line_number, "MALFORMED_RECORD", e.what()});
      continue;
    }
    auto [it, inserted] = seen.try_emplace(thread.thread_id, 1);
    if (!inserted) {
      if (options.strict) {
        throw Error(ErrorCode::kDuplicateThreadId,
                    "line " + std::to_string(line_number) + ": \"" + thread.thread_id + "\"");
      }
      std::string renamed;
      do {
        renamed = thread.thread_id + "#" + std::to_string(++it->second);
      } while (seen.count(renamed) != 0);
      seen.emplace(renamed, 1);
      result.diagnostics.push_back(
          {line_number, "DUPLICATE_THREAD_ID", "\"" + thread.thread_id + "\" renamed to \"" + renamed + "\""});
      thread.thread_id = std::move(renamed);
    }
    result.threads.push_back(std::move(thread));
  }
  return result;
}

}  // namespace mpsumm
