#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "mpsumm/error.hpp"
#include "mpsumm/losses.hpp"

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

SpanLogits logits(std::size_t t, std::size_t s, double fill = 0.0) { return {Matrix(t, s, fill), Matrix(t, s, fill)}; }

AffineLayer identity_twice(std::size_t h) {
  AffineLayer l{Matrix(2 * h, h), std::vector<double>(2 * h, 0.0)};
  for (std::size_t i = 0; i < h; ++i) {
    l.weight(i, i) = 1.0;
    l.weight(h + i, i) = 1.0;
  }
  return l;
}

}  // namespace

TEST_CASE("nll") {
  CHECK(nll_loss(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(nll_loss(std::vector<double>{-1.0, -1.0}) == 2.0);
  CHECK(nll_loss(std::vector<double>{-0.25, -1.5, -0.125}) == 1.875);
  CHECK(code_of([] { nll_loss(std::vector<double>{-std::numeric_limits<double>::infinity()}); }) ==
        ErrorCode::kNonfiniteInput);
}

TEST_CASE("self-critical loss") {
  const std::vector<double> lp = {-1.0, -1.0};
  CHECK(rl_loss(0.5, 0.5, lp) == 0.0);
  CHECK(rl_loss(0.9, 0.4, lp) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rl_loss(0.1, 0.6, lp) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixed loss presets") {
  CHECK(mixed_loss(1, 2, 0, kRlPreset) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(mixed_loss(0, 2, 3, kSpanPreset) == 5.0);
  CHECK(mixed_loss(0, 0, 0, kAllLossesPreset) == 0.0);
  CHECK(mixed_loss(2, 4, 100, kAllLossesPreset) == doctest::Approx(0.9 * 2 + 0.5 * 4 + 0.01 * 100).epsilon(1e-12));
}

TEST_CASE("reward schedule") {
  const std::vector<RewardName> all = {RewardName::kRougeL, RewardName::kNli, RewardName::kSemanticArea};
  const std::vector<RewardName> expect = {RewardName::kRougeL, RewardName::kNli, RewardName::kSemanticArea,
                                          RewardName::kRougeL, RewardName::kNli, RewardName::kSemanticArea};
  for (std::size_t i = 0; i < 6; ++i) CHECK(reward_schedule(i, all) == expect[i]);
  const std::vector<RewardName> one = {RewardName::kNli};
  for (std::size_t i = 0; i < 5; ++i) CHECK(reward_schedule(i, one) == RewardName::kNli);
  std::map<RewardName, int> counts;
  for (std::size_t i = 0; i < 1000; ++i) ++counts[reward_schedule(i, all)];
  for (const auto& [r, c] : counts) CHECK((c == 333 || c == 334));
  CHECK(code_of([] { reward_schedule(0, std::vector<RewardName>{}); }) == ErrorCode::kNoRewards);
}

TEST_CASE("span logits with identity layers") {
  const std::size_t h = 1024;
  SpanPredictorParams p{h, identity_twice(h), identity_twice(h)};
  Matrix enc(3, h), dec(2, h);
  enc(0, 5) = enc(1, 7) = enc(2, 900) = 1.0;
  dec(0, 7) = dec(1, 900) = 1.0;
  const auto l = span_logits(enc, dec, p);
  REQUIRE(l.start.rows == 2);
  REQUIRE(l.start.cols == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double hot = (i == 0 && j == 1) || (i == 1 && j == 2) ? 1.0 : 0.0;
      CHECK(l.start(i, j) == hot);
      CHECK(l.end(i, j) == hot);
    }
  }
  const auto z = span_logits(enc, Matrix(2, h), p);
  for (double v : z.start.data) CHECK(v == 0.0);
  CHECK(code_of([&] { span_logits(Matrix(3, 8), dec, p); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("span logits against a triple loop") {
  const std::size_t h = 1024;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  auto layer = [&] {
    AffineLayer l{Matrix(2 * h, h), std::vector<double>(2 * h)};
    for (double& x : l.weight.data) x = g(rng);
    for (double& x : l.bias) x = g(rng);
    return l;
  };
  SpanPredictorParams p{h, layer(), layer()};
  Matrix enc(3, h), dec(2, h);
  for (double& x : enc.data) x = g(rng);
  for (double& x : dec.data) x = g(rng);
  auto project = [&](const Matrix& x, const AffineLayer& l) {
    Matrix out(x.rows, 2 * h);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t o = 0; o < 2 * h; ++o) {
        double s = l.bias[o];
        for (std::size_t k = 0; k < h; ++k) s += l.weight(o, k) * x(r, k);
        out(r, o) = s;
      }
    return out;
  };
  const Matrix pe = project(enc, p.enc_layer), pd = project(dec, p.dec_layer);
  const auto l = span_logits(enc, dec, p);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0, e = 0;
      for (std::size_t k = 0; k < h; ++k) {
        s += pd(i, k) * pe(j, k);
        e += pd(i, h + k) * pe(j, h + k);
      }
      CHECK(l.start(i, j) == doctest::Approx(s).epsilon(1e-12));
      CHECK(l.end(i, j) == doctest::Approx(e).epsilon(1e-12));
    }
}

TEST_CASE("span loss values") {
  auto big = logits(2, 4);
  big.start(0, 1) = big.end(0, 2) = big.start(1, 3) = big.end(1, 3) = 30.0;
  const std::vector<GoldSpan> gold = {{1, 2}, {3, 3}};
  CHECK(span_loss(big, gold) < 1e-9);
  for (std::size_t s : {1u, 2u, 7u, 50u}) {
    const std::vector<GoldSpan> g0(3, GoldSpan{0, s - 1});
    CHECK(span_loss(logits(3, s, 0.4), g0) == doctest::Approx(2.0 * std::log(static_cast<double>(s))).epsilon(1e-12));
  }
  // two steps, two positions: start rows [0, ln 3] and [ln 3, 0]; end rows uniform
  auto two = logits(2, 2);
  two.start(0, 1) = std::log(3.0);
  two.start(1, 0) = std::log(3.0);
  const std::vector<GoldSpan> g2 = {{1, 0}, {1, 1}};
  // step 0: -ln(3/4) + ln 2, step 1: -ln(1/4) + ln 2, averaged
  CHECK(span_loss(two, g2) == doctest::Approx((-std::log(0.75) + std::log(4.0)) / 2 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("span loss errors") {
  CHECK(code_of([] { span_loss(logits(2, 3), std::vector<GoldSpan>{{0, 0}}); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([] { span_loss(logits(1, 3), std::vector<GoldSpan>{{0, 3}}); }) == ErrorCode::kIndexOutOfRange);
  auto bad = logits(1, 3);
  bad.start(0, 0) = std::nan("");
  CHECK(code_of([&] { span_loss(bad, std::vector<GoldSpan>{{0, 0}}); }) == ErrorCode::kNonfiniteInput);
}

TEST_CASE("span gradient matches central differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    auto l = logits(3, 5);
    for (double& x : l.start.data) x = g(rng);
    for (double& x : l.end.data) x = g(rng);
    const std::vector<GoldSpan> gold = {{0, 4}, {2, 2}, {4, 1}};
    const auto grad = span_loss_gradient(l, gold);
    const double h = 1e-6;
    for (int which = 0; which < 2; ++which) {
      Matrix& m = which == 0 ? l.start : l.end;
      const Matrix& gm = which == 0 ? grad.start : grad.end;
      for (std::size_t k = 0; k < m.data.size(); ++k) {
        const double keep = m.data[k];
        m.data[k] = keep + h;
        const double up = span_loss(l, gold);
        m.data[k] = keep - h;
        const double down = span_loss(l, gold);
        m.data[k] = keep;
        CHECK(std::abs((up - down) / (2 * h) - gm.data[k]) < 1e-5);
      }
    }
  }
}

TEST_CASE("gold spans") {
  const std::vector<std::string> sources = {"the red fox", "a lazy dog sleeps", "birds sing at dawn", "red apples"};
  const std::vector<std::string> targets = {"a lazy dog sleeps", "zebra", "red fox"};
  CHECK(gold_spans(targets, sources) == std::vector<std::size_t>{1, 0, 0});
  CHECK(code_of([&] { gold_spans(targets, std::vector<std::string>{}); }) == ErrorCode::kEmptySource);
}

TEST_CASE("source layout and step spans") {
  const std::vector<std::string> sources = {"one two", "", "three four five"};
  const auto layout = layout_source(sources);
  CHECK(layout.tokens == std::vector<std::string>{"</s>", "one", "two", "</s>", "</s>", "three", "four", "five"});
  REQUIRE(layout.sentence_spans.size() == 3);
  CHECK(layout.sentence_spans[0].start == 1);
  CHECK(layout.sentence_spans[0].end == 2);
  CHECK(layout.sentence_spans[1].start == 3);
  CHECK(layout.sentence_spans[1].end == 3);
  CHECK(layout.sentence_spans[2].start == 5);
  CHECK(layout.sentence_spans[2].end == 7);
  const std::vector<std::string> targets = {"x y", "z"};
  const std::vector<std::size_t> gold = {2, 0};
  const auto steps = step_spans(targets, gold, layout);
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].start == 5);
  CHECK(steps[1].end == 7);
  CHECK(steps[2].start == 1);
}
