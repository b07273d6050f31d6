#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpsumm/error.hpp"
#include "mpsumm/textproc.hpp"

using namespace mpsumm;

namespace {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Plain FNV-1a, written out again for the hashing checks.
std::uint64_t fnv(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST_CASE("segmentation basics") {
  CHECK(split_sentences("Yes. Feed twice daily.").size() == 2);
  CHECK(split_sentences("I weigh 5.5 kg total.").size() == 1);
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   \n\n  ").empty());
}

TEST_CASE("segmentation fixture file") {
  std::ifstream in(MPSUMM_TEST_DATA "/segmentation.jsonl");
  REQUIRE(in);
  std::string line;
  std::size_t sentences = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto expected = j.at("sentences").get<std::vector<std::string>>();
    CAPTURE(line);
    CHECK(split_sentences(j.at("text").get<std::string>()) == expected);
    sentences += expected.size();
  }
  CHECK(sentences == 20);
}

TEST_CASE("custom abbreviations") {
  const AbbreviationList none(std::set<std::string>{});
  CHECK(split_sentences("See Dr. Who now.", none).size() == 2);
  CHECK(split_sentences("See Dr. Who now.").size() == 1);
}

TEST_CASE("segment ids and token stats") {
  const auto units = segment("Short one. A much longer sentence here.", "a7");
  REQUIRE(units.size() == 2);
  CHECK(units[1].id.str() == "a7:1");
  CHECK(units[1].word_count == 5);
  CHECK(units[1].char_max_token == 8);
  CHECK(make_sentence({"x", 0}, "na\xC3\xAFve").char_max_token == 5);
}

TEST_CASE("terms strip punctuation and lowercase") {
  CHECK(terms("Hello, World! (it's) --") == std::vector<std::string>{"hello", "world", "it's"});
}

TEST_CASE("bm25 exact match and disjoint query") {
  const std::vector<std::string> corpus = {"alpha beta", "gamma delta", "red fox runs", "epsilon"};
  const auto s = bm25_scores("red fox runs", corpus);
  CHECK(argmax_lowest(s) == 2);
  for (double v : bm25_scores("zzz qqq", corpus)) CHECK(v == 0.0);
  CHECK_THROWS_AS(bm25_scores("x", std::vector<std::string>{}), Error);
}

TEST_CASE("bm25 red fox hand computation") {
  // d0: 4 terms, d1: 6 terms, d2: 3 terms; avgdl = 13/3
  const std::vector<std::string> corpus = {"the red fox jumps", "a brown dog sleeps here now", "red red apples"};
  const auto s = bm25_scores("red fox", corpus);
  const double idf_red = std::log(1.5 / 2.5 + 1.0);
  const double idf_fox = std::log(2.5 / 1.5 + 1.0);
  const double k0 = 1.2 * 49.0 / 52.0;  // 1.2 * (0.25 + 0.75 * 12/13)
  const double k2 = 1.2 * 40.0 / 52.0;  // 1.2 * (0.25 + 0.75 * 9/13)
  CHECK(s[0] == doctest::Approx((idf_red + idf_fox) * 2.2 / (1.0 + k0)).epsilon(1e-12));
  CHECK(s[1] == 0.0);
  CHECK(s[2] == doctest::Approx(idf_red * 2.0 * 2.2 / (2.0 + k2)).epsilon(1e-12));
  // repeating a query term changes nothing
  CHECK(bm25_scores("red red fox", corpus) == s);
}

TEST_CASE("argmax ties go low") {
  const std::vector<double> v = {1.0, 3.0, 3.0};
  CHECK(argmax_lowest(v) == 1);
  CHECK(argmax_lowest(std::vector<double>{}) == 0);
}

TEST_CASE("hash feature matches plain fnv") {
  for (const std::string t : {"fox", "a", "sourdough", ""}) {
    const std::uint64_t h = fnv(t, 14695981039346656037ULL ^ 0x9E3779B97F4A7C15ULL);
    const auto f = hash_feature(t, 4096);
    CHECK(f.bucket == h % 4096);
    CHECK(f.sign == ((h >> 63) ? -1.0 : 1.0));
  }
}

TEST_CASE("tfidf identical, disjoint, unit norm") {
  const std::vector<std::string> a = {"apple banana cherry", "delta echo foxtrot", "apple banana cherry", "!!!"};
  std::set<std::size_t> buckets;
  for (const auto& t : {"apple", "banana", "cherry", "delta", "echo", "foxtrot"}) buckets.insert(hash_feature(t, 4096).bucket);
  REQUIRE(buckets.size() == 6);  // fixture is collision-free
  const auto v = tfidf_embed(a, 4096);
  CHECK(dot(v[0], v[2]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dot(v[0], v[1]) == 0.0);
  for (const auto& x : v) CHECK(std::sqrt(dot(x, x)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(tfidf_embed(a, 8), Error);
}
