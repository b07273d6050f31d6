#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "mpsumm/filters.hpp"

using namespace mpsumm;

namespace {

std::string words(std::size_t n, const std::string& w = "tea") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

SummaryExample example(std::size_t source_tokens, std::size_t summary_tokens) {
  SummaryExample e;
  e.id = "x";
  e.question = "which tea";
  e.source_sentences.push_back(make_sentence({"a", 0}, words(source_tokens)));
  e.bullets.push_back(words(summary_tokens));
  return e;
}

bool only(const FilterVerdict& v, ExampleRule r) { return v.violations.size() == 1 && v.violations[0] == r; }

}  // namespace

TEST_CASE("compression") {
  LexicalProvider p;
  CHECK(only(filter_example(example(390, 100), p), ExampleRule::kCompression));
  CHECK(filter_example(example(400, 100), p).accepted);
}

TEST_CASE("lengths") {
  LexicalProvider p;
  CHECK(filter_example(example(1100, 250), p).accepted);
  CHECK(only(filter_example(example(1101, 250), p), ExampleRule::kInputLen));
  CHECK(filter_example(example(1100 * 2, 251), p).violations ==
        std::vector<ExampleRule>{ExampleRule::kInputLen, ExampleRule::kSummaryLen});
  FilterThresholds loose;
  loose.input_cap = 5000;
  CHECK(only(filter_example(example(1100 * 2, 251), p, loose), ExampleRule::kSummaryLen));
}

TEST_CASE("math symbols") {
  LexicalProvider p;
  auto e = example(40, 10);
  e.question = "what is 1+1+1+1+1+1+1+1+1+1+1+1";  // eleven '+'
  CHECK(only(filter_example(e, p), ExampleRule::kMathSymbols));
  e.question = "what is 1+1+1+1+1+1+1+1+1+1+1";  // ten
  CHECK(filter_example(e, p).accepted);
  e.question = "a==========b";  // ten '='
  CHECK(filter_example(e, p).accepted);
  e.question = "a===========b";
  CHECK(only(filter_example(e, p), ExampleRule::kMathSymbols));
}

TEST_CASE("long token") {
  LexicalProvider p;
  auto e = example(100, 10);
  e.bullets[0] += " " + std::string(51, 'x');
  CHECK(only(filter_example(e, p), ExampleRule::kLongToken));
  e.bullets[0] = words(10) + " " + std::string(50, 'x');
  CHECK(filter_example(e, p).accepted);
}

TEST_CASE("links") {
  LexicalProvider p;
  CHECK(is_url_token("(https://a.b/c)."));
  CHECK(is_url_token("WWW.example.com"));
  CHECK_FALSE(is_url_token("http"));
  auto e = example(100, 10);
  e.bullets[0] += " see www.tea.com";
  CHECK(only(filter_example(e, p), ExampleRule::kLinks));
  e = example(100, 10);
  e.source_sentences[0].text += " http://a.io";
  CHECK(filter_example(e, p).accepted);
  e.source_sentences[0].text += " http://b.io";
  CHECK(only(filter_example(e, p), ExampleRule::kLinks));
}

TEST_CASE("contradiction") {
  LexicalProvider p;
  SummaryExample e;
  e.question = "is the shop open";
  e.source_sentences.push_back(make_sentence({"a", 0}, "the shop is open on sunday " + words(40)));
  e.bullets.push_back("the shop is not open on sunday");
  CHECK(only(filter_example(e, p), ExampleRule::kContradiction));
  e.bullets[0] = "the shop is open on sunday";
  CHECK(filter_example(e, p).accepted);
}

TEST_CASE("entity coverage") {
  LexicalProvider p;
  SummaryExample e;
  e.question = "where to go";
  e.source_sentences.push_back(make_sentence({"a", 0}, "we went to Paris last year " + words(40)));
  e.bullets.push_back("go to Paris");
  CHECK(filter_example(e, p).accepted);
  e.bullets[0] = "go to Rome";
  CHECK(only(filter_example(e, p), ExampleRule::kEntityCoverage));
}

TEST_CASE("filter report") {
  std::vector<FilterVerdict> v(10);
  v[1] = {false, {ExampleRule::kCompression}};
  v[4] = {false, {ExampleRule::kCompression, ExampleRule::kLinks}};
  v[7] = {false, {ExampleRule::kEntityCoverage}};
  const auto r = filter_report(v);
  CHECK(r.total == 10);
  CHECK(r.accepted == 7);
  CHECK(r.survival_rate() == doctest::Approx(0.7));
  CHECK(r.count(ExampleRule::kCompression) == 2);
  CHECK(r.count(ExampleRule::kLinks) == 1);
  CHECK(r.count(ExampleRule::kEntityCoverage) == 1);
  CHECK(r.table().find("COMPRESSION") != std::string::npos);

  const auto empty = filter_report(std::vector<FilterVerdict>{});
  CHECK(empty.total == 0);
  CHECK(empty.accepted == 0);
  CHECK(empty.survival_rate() == 0.0);
  for (auto rule : kAllExampleRules) CHECK(empty.count(rule) == 0);
}
