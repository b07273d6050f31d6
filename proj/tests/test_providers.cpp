#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mpsumm/error.hpp"
#include "mpsumm/hash.hpp"
#include "mpsumm/providers.hpp"

using namespace mpsumm;
namespace fs = std::filesystem;

namespace {

const std::string kStub = MPSUMM_STUB_SIDECAR;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kStage;
}

std::unique_ptr<FileProvider> file_provider(const std::string& text) {
  std::istringstream in(text);
  return FileProvider::parse(in, "fixture");
}

// Same arithmetic as the stub's embedding.
EmbeddingVector stub_embedding(const std::string& text, std::size_t dim) {
  EmbeddingVector v(dim, 0.0);
  for (std::size_t i = 0; i < text.size(); ++i) v[i % dim] += static_cast<unsigned char>(text[i]);
  double n = 0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

}  // namespace

TEST_CASE("lexical relevance by hand") {
  const std::string q = "How do I repot a basil plant?";  // content words: repot, basil, plant
  CHECK(lexical_relevance(q, "Repot the basil carefully.") == doctest::Approx(2.0 / 3.0));
  CHECK(lexical_relevance(q, "Basil likes sun.") == doctest::Approx(1.0 / 3.0));
  CHECK(lexical_relevance(q, "Plant basil, then repot.") == 1.0);
  CHECK(lexical_relevance(q, "Water daily.") == 0.0);
  CHECK(lexical_relevance(q, "") == 0.0);
  LexicalProvider p;
  CHECK(p.relevance(q, "Repot the basil carefully.").prob_relevant >= 0.5);
}

TEST_CASE("lexical nli") {
  const auto same = lexical_nli("the cat sat on the mat", "the cat sat on the mat");
  CHECK(same.entail >= 0.9);
  CHECK(same.argmax() == NliJudgment::Label::kEntail);
  const auto disjoint = lexical_nli("dogs bark loudly", "stocks fell sharply");
  CHECK(disjoint.argmax() == NliJudgment::Label::kNeutral);
  const auto negated = lexical_nli("the shop is open today", "the shop is not open today");
  CHECK(negated.argmax() == NliJudgment::Label::kContradict);
  for (const auto& j : {same, disjoint, negated}) CHECK(j.entail + j.neutral + j.contradict == doctest::Approx(1.0));
}

TEST_CASE("lexical entities") {
  CHECK(lexical_entities("I visited New York in 2019") == std::set<std::string>{"New York", "2019"});
  CHECK(lexical_entities("all lowercase words here").empty());
  CHECK(lexical_entities("John left.").empty());
  CHECK(lexical_entities("John left. Later we met John again.") == std::set<std::string>{"John"});
  CHECK(lexical_entities("I'm sure I can").empty());
  CHECK(lexical_entities("room 101 or 12345") == std::set<std::string>{"12345"});
}

TEST_CASE("lexical embed") {
  LexicalProvider p(256);
  CHECK(p.embed({}).empty());
  const auto v = p.embed({"same words here", "other text", "same words here"});
  CHECK(v[0] == v[2]);
  CHECK(v[0].size() == 256);
  CHECK(p.capabilities().concurrency == Concurrency::kConcurrent);
}

TEST_CASE("file provider lookups") {
  const std::string q = "best tea?";
  const std::string s = "green tea.";
  std::string text = nlohmann::json{{"op", "relevance"}, {"key", content_key(q, s)}, {"prob", 0.87}}.dump() + "\n";
  text += nlohmann::json{{"op", "nli"}, {"premise", "a"}, {"hypothesis", "b"}, {"entail", 0.7}, {"neutral", 0.2},
                         {"contradict", 0.1}}.dump() + "\n";
  text += nlohmann::json{{"op", "embed"}, {"text", "x"}, {"vector", {1.0, 0.0}}}.dump() + "\n";
  auto p = file_provider(text);
  CHECK(p->relevance(q, s).prob_relevant == 0.87);
  const auto j = p->nli("a", "b");
  CHECK(j.entail == 0.7);
  CHECK(j.neutral == 0.2);
  CHECK(j.contradict == 0.1);
  CHECK(p->embed({"x", "x"}) == std::vector<EmbeddingVector>{{1.0, 0.0}, {1.0, 0.0}});
  CHECK(p->capabilities().embed_dim == 2);
  CHECK(code_of([&] { p->relevance(q, "other"); }) == ErrorCode::kMissingScore);
  CHECK(code_of([&] { p->embed({"y"}); }) == ErrorCode::kMissingScore);
  CHECK(code_of([&] { p->entities("x"); }) == ErrorCode::kUnsupportedOp);
  CHECK(p->describe().rfind("file:fixture@", 0) == 0);
}

TEST_CASE("file provider rejects bad rows") {
  const std::string two = nlohmann::json{{"op", "embed"}, {"key", "k1"}, {"vector", {1.0, 0.0}}}.dump();
  const std::string three = nlohmann::json{{"op", "embed"}, {"key", "k2"}, {"vector", {1.0, 0.0, 0.0}}}.dump();
  CHECK(code_of([&] { file_provider(two + "\n" + three + "\n"); }) == ErrorCode::kDimMismatch);
  CHECK(code_of([&] { file_provider("{\"op\":\"nli\",\"key\":\"k\",\"entail\":0.5,\"neutral\":0.2,\"contradict\":0.1}"); }) ==
        ErrorCode::kMalformedRecord);
  CHECK(code_of([&] { file_provider("{\"op\":\"relevance\",\"key\":\"k\",\"prob\":1.5}"); }) ==
        ErrorCode::kMalformedRecord);
  CHECK(code_of([&] { file_provider("not json"); }) == ErrorCode::kMalformedRecord);
}

TEST_CASE("content keys") {
  CHECK(content_key("") == "cbf29ce484222325");
  CHECK(content_key("a") == "af63dc4c8601ec8c");
  CHECK(content_key("a", "b") == content_key("a\x1f" "b"));
}

TEST_CASE("sidecar handshake and ops") {
  SidecarProvider p(spawn_channel(kStub + " --dim 6"));
  const auto caps = p.capabilities();
  CHECK(caps.has(ScorerOp::kEmbed));
  CHECK(caps.has(ScorerOp::kNli));
  CHECK(caps.embed_dim == 6);
  CHECK(caps.concurrency == Concurrency::kSerialized);
  CHECK(p.relevance("q", "abc").prob_relevant == 0.75);
  CHECK(p.nli("x", "x").argmax() == NliJudgment::Label::kEntail);
  CHECK(p.entities("Hello") == std::set<std::string>{"Hello", "Stub"});
  const std::vector<std::string> sentences = {"first sentence", "b", "a third, longer one"};
  const auto v = p.embed(sentences);
  REQUIRE(v.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto expect = stub_embedding(sentences[i], 6);
    for (std::size_t d = 0; d < 6; ++d) CHECK(v[i][d] == doctest::Approx(expect[d]).epsilon(1e-12));
  }
  CHECK(code_of([&] { p.call("bogus"); }) == ErrorCode::kProviderUnavailable);
}

TEST_CASE("sidecar vectors of the wrong width") {
  SidecarProvider p(spawn_channel(kStub + " --dim 6 --emit-dim 5"));
  CHECK(code_of([&] { p.embed({"x"}); }) == ErrorCode::kDimMismatch);
}

TEST_CASE("sidecar without embed rejects embed") {
  SidecarProvider p(spawn_channel(kStub + " --no-embed"));
  CHECK(code_of([&] { p.embed({"x"}); }) == ErrorCode::kUnsupportedOp);
}

TEST_CASE("sidecar that exits is unavailable") {
  CHECK(code_of([] { SidecarProvider p(spawn_channel("exit 0")); }) == ErrorCode::kProviderUnavailable);
}

TEST_CASE("serialized sidecar never sees two requests at once") {
  SidecarProvider p(spawn_channel(kStub + " --serialized --delay-us 300"));
  std::vector<std::thread> pool;
  for (int t = 0; t < 6; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) p.relevance("q", std::string(static_cast<std::size_t>(t + i), 'x'));
    });
  }
  for (auto& th : pool) th.join();
  const auto stats = p.call("stats");
  CHECK(stats.at("requests").get<long>() == 6 * 25 + 2);
  CHECK(stats.at("overlaps").get<long>() == 0);
}

TEST_CASE("concurrent sidecar pipelines and matches ids") {
  SUBCASE("overlap detector fires when requests are pipelined") {
    SidecarProvider p(spawn_channel(kStub + " --concurrent --delay-us 2000"));
    std::vector<std::thread> pool;
    for (int t = 0; t < 6; ++t) {
      pool.emplace_back([&] {
        for (int i = 0; i < 10; ++i) p.relevance("q", "abc");
      });
    }
    for (auto& th : pool) th.join();
    CHECK(p.call("stats").at("overlaps").get<long>() > 0);
  }
  SUBCASE("responses returned newest first") {
    SidecarProvider p(spawn_channel(kStub + " --concurrent --reverse 4"));
    for (int round = 0; round < 5; ++round) {
      std::vector<std::thread> pool;
      std::vector<double> got(4);
      for (int t = 0; t < 4; ++t) {
        pool.emplace_back([&, t] { got[static_cast<std::size_t>(t)] = p.relevance("q", std::string(static_cast<std::size_t>(t + 1), 'y')).prob_relevant; });
      }
      for (auto& th : pool) th.join();
      CHECK(got == std::vector<double>{0.75, 0.25, 0.75, 0.25});
    }
  }
}

TEST_CASE("sidecar over tcp") {
  const fs::path port_file = fs::temp_directory_path() / ("mpsumm_stub_port_" + std::to_string(::getpid()));
  fs::remove(port_file);
  std::thread server([&] { std::system((kStub + " --tcp " + port_file.string()).c_str()); });
  for (int i = 0; i < 500 && !fs::exists(port_file); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(fs::exists(port_file));
  int port = 0;
  std::ifstream(port_file) >> port;
  {
    auto p = make_provider("sidecar:tcp://127.0.0.1:" + std::to_string(port));
    CHECK(p->capabilities().embed_dim == 8);
    CHECK(p->relevance("q", "ab").prob_relevant == 0.25);
    CHECK(p->embed({"tcp"}).at(0) == stub_embedding("tcp", 8));
  }
  server.join();
  fs::remove(port_file);
}

TEST_CASE("make_provider specs") {
  CHECK(make_provider("lexical", 64)->describe() == "lexical:64");
  CHECK(code_of([] { make_provider("bogus"); }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([] { make_provider("file:/nonexistent/scores.jsonl"); }) == ErrorCode::kIo);
  auto p = make_provider("sidecar:" + kStub);
  CHECK(p->capabilities().has(ScorerOp::kRelevance));
}
