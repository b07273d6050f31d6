#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>

#include "mpsumm/corpus.hpp"
#include "mpsumm/error.hpp"

using namespace mpsumm;

namespace {

std::string words(std::size_t n, const std::string& w = "word") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

QAThread thread_with(std::initializer_list<std::size_t> lengths) {
  QAThread t;
  t.thread_id = "t";
  t.question_subject = "q";
  std::size_t i = 0;
  for (auto n : lengths) t.answers.push_back({"a" + std::to_string(i++), words(n), n});
  return t;
}

std::string record(const std::string& id, std::size_t answers) {
  std::string s = R"({"id":")" + id + R"(","subject":"How?","answers":[)";
  for (std::size_t i = 0; i < answers; ++i) s += std::string(i ? "," : "") + R"({"text":"answer )" + std::to_string(i) + R"("})";
  return s + "]}";
}

}  // namespace

TEST_CASE("count_words counts whitespace runs") {
  CHECK(count_words("") == 0);
  CHECK(count_words("   ") == 0);
  CHECK(count_words("one") == 1);
  CHECK(count_words("  one\ttwo\n\nthree  ") == 3);
  // precomposed and decomposed e-acute count the same
  CHECK(count_words("caf\xC3\xA9 au lait") == count_words("cafe\xCC\x81 au lait"));
}

TEST_CASE("ingest maps a five answer record") {
  std::istringstream in(record("t1", 5));
  const auto r = ingest(in);
  REQUIRE(r.threads.size() == 1);
  CHECK(r.threads[0].answers.size() == 5);
  CHECK(r.threads[0].answers[2].answer_id == "t1-a2");
  CHECK(r.threads[0].answers[2].word_count == 2);
  CHECK(r.diagnostics.empty());
}

TEST_CASE("question joins subject and content") {
  const auto t = parse_thread(R"({"id":"x","subject":"Best tea?","content":"For mornings.","answers":[]})");
  CHECK(t.question() == "Best tea? For mornings.");
  const auto u = parse_thread(R"({"id":"x","subject":"Best tea?","content":null,"answers":[]})");
  CHECK(u.question() == "Best tea?");
}

TEST_CASE("missing answers is malformed") {
  CHECK_THROWS_AS(parse_thread(R"({"id":"x","subject":"s"})"), Error);
  std::istringstream in(std::string(R"({"id":"x","subject":"s"})") + "\n" + record("ok", 1) + "\nnot json\n");
  const auto r = ingest(in);
  CHECK(r.threads.size() == 1);
  REQUIRE(r.diagnostics.size() == 2);
  CHECK(r.diagnostics[0].code == "MALFORMED_RECORD");
  CHECK(r.diagnostics[0].line_number == 1);
  CHECK(r.diagnostics[1].line_number == 3);

  std::istringstream strict_in(R"({"id":"x","subject":"s"})");
  try {
    ingest(strict_in, {true});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedRecord);
  }
}

TEST_CASE("duplicate ids") {
  const std::string two = record("t1", 1) + "\n" + record("t1", 2) + "\n" + record("t1", 3) + "\n";
  std::istringstream lenient(two);
  const auto r = ingest(lenient);
  REQUIRE(r.threads.size() == 3);
  CHECK(r.threads[1].thread_id == "t1#2");
  CHECK(r.threads[2].thread_id == "t1#3");
  CHECK(r.diagnostics.size() == 2);

  std::istringstream strict(two);
  try {
    ingest(strict, {true});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateThreadId);
  }
}

TEST_CASE("extra keys survive a round trip") {
  const auto t = parse_thread(R"({"id":"x","subject":"s","answers":[{"id":"b","text":"hi there"}],"cat":"food","n":3})");
  CHECK(t.metadata.at("cat") == "food");
  CHECK(t.metadata.at("n") == "3");
  const auto u = parse_thread(serialize_thread(t));
  CHECK(u.thread_id == "x");
  CHECK(u.answers.at(0).answer_id == "b");
  CHECK(u.metadata == t.metadata);
}

TEST_CASE("thread heuristics") {
  SUBCASE("four answers of sixty words") {
    const auto v = thread_filter(thread_with({60, 60, 60, 60}));
    CHECK_FALSE(v.accepted);
    REQUIRE(v.rejected_rules.size() == 1);
    CHECK(v.rejected_rules[0] == ThreadRule::kMinAnswers);
  }
  SUBCASE("one answer of 401 words") {
    const auto v = thread_filter(thread_with({401, 60, 60, 60, 60}));
    CHECK_FALSE(v.accepted);
    REQUIRE(v.rejected_rules.size() == 1);
    CHECK(v.rejected_rules[0] == ThreadRule::kMaxLongest);
  }
  SUBCASE("five answers of sixty words") { CHECK(thread_filter(thread_with({60, 60, 60, 60, 60})).accepted); }
  SUBCASE("open intervals") {
    // sum exactly 1000 and avg exactly 200
    CHECK_FALSE(thread_filter(thread_with({200, 200, 200, 200, 200})).accepted);
    // avg exactly 50 with sum 250
    const auto v = thread_filter(thread_with({50, 50, 50, 50, 50}));
    REQUIRE(v.rejected_rules.size() == 1);
    CHECK(v.rejected_rules[0] == ThreadRule::kAvgRange);
  }
}

TEST_CASE("verdict record lists rules") {
  const auto t = thread_with({60, 60});
  CHECK(verdict_record(t, thread_filter(t)) == R"({"id":"t","accepted":false,"rules":["MIN_ANSWERS"]})");
}
