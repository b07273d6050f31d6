#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mpsumm/error.hpp"
#include "mpsumm/metrics.hpp"

using namespace mpsumm;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kStage;
}

}  // namespace

TEST_CASE("rouge-l fixtures") {
  const auto same = rouge_l("the cat sat", "the cat sat");
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  CHECK(rouge_l("a b c", "d e f").f1 == 0.0);
  const auto r = rouge_l("the cat ran", "the cat sat");
  CHECK(r.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rouge_l("The Cat", "the cat").f1 == 1.0);
  CHECK(rouge_l("", "the cat").f1 == 0.0);
  const std::vector<std::string> a = {"a", "b", "c", "b", "d"}, b = {"b", "d", "c", "a", "b"};
  CHECK(lcs_length(a, b) == 3);
}

TEST_CASE("nli score arithmetic") {
  const std::vector<double> m = {0.2, 0.9, 0.4, 0.1};
  CHECK(nli_score(m, 2, 2) == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(nli_score(std::vector<double>{0.3, 1.0, 0.5}, 1, 3) == 1.0);
  CHECK(nli_score(std::vector<double>(6, 0.0), 2, 3) == 0.0);
  CHECK(code_of([] { nli_score(std::vector<double>{}, 0, 2); }) == ErrorCode::kEmptySummary);
  CHECK(code_of([] { nli_score(std::vector<double>{}, 2, 0); }) == ErrorCode::kEmptySource);
  CHECK(code_of([] { nli_score(std::vector<double>{0.1}, 2, 2); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("nli score with a provider") {
  LexicalProvider p;
  const std::vector<std::string> summary = {"green tea is good"};
  const std::vector<std::string> source = {"green tea is good", "coffee is bitter"};
  CHECK(nli_score(summary, source, p) == doctest::Approx(0.95));
}

TEST_CASE("hull and shoelace") {
  const std::vector<Point2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(shoelace_area(sq) == 1.0);
  auto hull = convex_hull({{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 0}});
  CHECK(hull.size() == 4);
  CHECK(shoelace_area(hull) == 4.0);
  CHECK(convex_hull({{0, 0}, {1, 1}, {2, 2}}).size() == 2);
}

TEST_CASE("semantic area") {
  const std::vector<EmbeddingVector> tri = {{0, 0}, {1, 0}, {0, 1}};
  CHECK(semantic_area(tri) == doctest::Approx(0.5).epsilon(1e-12));
  const std::vector<EmbeddingVector> same = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  CHECK(semantic_area(same) == 0.0);
  CHECK(semantic_area(std::vector<EmbeddingVector>{{0, 0}, {1, 1}}) == 0.0);
  CHECK(semantic_area(std::vector<EmbeddingVector>{{0, 0, 0}, {1, 1, 1}, {3, 3, 3}}) == 0.0);
  // a 3-D embedding of the same triangle
  const std::vector<EmbeddingVector> lifted = {{0, 0, 5}, {1, 0, 5}, {0, 1, 5}};
  CHECK(semantic_area(lifted) == doctest::Approx(0.5).epsilon(1e-12));
  const auto proj = pca_project(lifted);
  CHECK(proj.points.size() == 3);
  CHECK(proj.singular_values[0] >= proj.singular_values[1]);
}

TEST_CASE("normalize area") {
  CHECK(normalize_area(std::vector<double>{0, 5, 10}) == std::vector<double>{0, 0.5, 1});
  CHECK(normalize_area(std::vector<double>{3}) == std::vector<double>{0.5});
  CHECK(normalize_area(std::vector<double>{2, 2, 2}) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(normalize_area(std::vector<double>{}).empty());
}

TEST_CASE("novel unigrams and compression") {
  const std::vector<std::string> source = {"one two three four five", "six seven eight nine ten"};
  CHECK(novel_unigram_rate(std::vector<std::string>{"two four", "six"}, source) == 0.0);
  CHECK(novel_unigram_rate(std::vector<std::string>{"one two three four five six seven eight nine eleven"}, source) ==
        doctest::Approx(0.1));
  CHECK(compression_ratio(400, 100) == 4.0);
}

TEST_CASE("dataset stats by hand") {
  std::vector<StatsInput> in(2);
  in[0] = {"best tea", {"green tea is nice", "black tea too"}, {"green tea"}, true};
  in[1] = {"why", {"a b c d e f g h"}, {"a z", "b"}, false};
  const auto s = dataset_stats(in);
  CHECK(s.count == 2);
  CHECK(s.mean_question_tokens == doctest::Approx(1.5));
  CHECK(s.mean_source_tokens == doctest::Approx(7.5));   // 7 and 8
  CHECK(s.mean_summary_tokens == doctest::Approx(2.5));  // 2 and 3
  CHECK(s.mean_bullets == doctest::Approx(1.5));
  CHECK(s.mean_compression == doctest::Approx((7.0 / 2 + 8.0 / 3) / 2));
  CHECK(s.novel_unigram_pct == doctest::Approx((0.0 + 100.0 / 3) / 2));
  REQUIRE(s.factoid_pct.has_value());
  CHECK(*s.factoid_pct == doctest::Approx(50.0));
  CHECK(s.table().find("examples") != std::string::npos);
}
