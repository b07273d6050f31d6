#include "mpsumm/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mpsumm/error.hpp"

namespace mpsumm {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonfiniteInput, std::string(what) + " contains a non-finite value");
  }
}

void require_finite(double v, const char* what) { require_finite(std::span<const double>(&v, 1), what); }

double sum_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

Matrix apply_layer(const Matrix& states, const AffineLayer& layer, std::size_t hidden) {
  if (states.cols != hidden) {
    throw Error(ErrorCode::kShapeMismatch,
                "state width " + std::to_string(states.cols) + " != hidden " + std::to_string(hidden));
  }
  if (layer.weight.rows != 2 * hidden || layer.weight.cols != hidden || layer.bias.size() != 2 * hidden) {
    throw Error(ErrorCode::kShapeMismatch, "span layer must map hidden -> 2 * hidden");
  }
  Matrix out(states.rows, 2 * hidden);
  for (std::size_t r = 0; r < states.rows; ++r) {
    const auto x = states.row(r);
    for (std::size_t o = 0; o < 2 * hidden; ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < hidden; ++k) acc += w[k] * x[k];
      out(r, o) = acc;
    }
  }
  return out;
}

// Inner products of decoder rows with encoder rows over columns [offset, offset + width).
Matrix half_products(const Matrix& dec, const Matrix& enc, std::size_t offset, std::size_t width) {
  Matrix out(dec.rows, enc.rows);
  for (std::size_t t = 0; t < dec.rows; ++t) {
    for (std::size_t s = 0; s < enc.rows; ++s) {
      double acc = 0.0;
      for (std::size_t k = offset; k < offset + width; ++k) acc += dec(t, k) * enc(s, k);
      out(t, s) = acc;
    }
  }
  return out;
}

// -log softmax(row)[gold], computed with the max-shift.
double row_cross_entropy(std::span<const double> row, std::size_t gold) {
  const double m = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - m);
  return std::log(z) + m - row[gold];
}

void softmax_minus_onehot(std::span<const double> row, std::size_t gold, double scale, std::span<double> out) {
  const double m = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - m);
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = (std::exp(row[i] - m) / z - (i == gold ? 1.0 : 0.0)) * scale;
  }
}

void check_gold(const SpanLogits& logits, std::span<const GoldSpan> gold) {
  if (logits.start.rows != logits.end.rows || logits.start.cols != logits.end.cols) {
    throw Error(ErrorCode::kShapeMismatch, "start and end logits differ in shape");
  }
  if (gold.size() != logits.start.rows) {
    throw Error(ErrorCode::kShapeMismatch, "one gold span per target step is required");
  }
  if (logits.start.rows == 0 || logits.start.cols == 0) throw Error(ErrorCode::kShapeMismatch, "empty logits");
  for (const auto& g : gold) {
    if (g.start >= logits.start.cols || g.end >= logits.start.cols) {
      throw Error(ErrorCode::kIndexOutOfRange, "gold span index beyond source length");
    }
  }
  require_finite(logits.start.data, "start logits");
  require_finite(logits.end.data, "end logits");
}

}  // namespace

double nll_loss(std::span<const double> logp) {
  if (logp.empty()) throw Error(ErrorCode::kShapeMismatch, "nll_loss needs at least one step");
  require_finite(logp, "log-probabilities");
  return -sum_of(logp);
}

double rl_loss(double r_greedy, double r_sample, std::span<const double> sample_logp) {
  require_finite(r_greedy, "greedy reward");
  require_finite(r_sample, "sample reward");
  if (sample_logp.empty()) throw Error(ErrorCode::kShapeMismatch, "rl_loss needs at least one step");
  require_finite(sample_logp, "sample log-probabilities");
  return (r_greedy - r_sample) * sum_of(sample_logp);
}

double mixed_loss(double l_rl, double l_ml, double l_span, const LossWeights& w) {
  for (double v : {l_rl, l_ml, l_span, w.gamma_rl, w.gamma_ml, w.gamma_span}) require_finite(v, "mixed_loss input");
  return w.gamma_rl * l_rl + w.gamma_ml * l_ml + w.gamma_span * l_span;
}

std::string_view to_string(RewardName r) {
  switch (r) {
    case RewardName::kRougeL: return "rouge_l";
    case RewardName::kNli: return "nli";
    case RewardName::kSemanticArea: return "semantic_area";
  }
  return "unknown";
}

RewardName reward_schedule(std::size_t minibatch_index, std::span<const RewardName> enabled) {
  std::vector<RewardName> order;
  for (auto r : {RewardName::kRougeL, RewardName::kNli, RewardName::kSemanticArea}) {
    if (std::find(enabled.begin(), enabled.end(), r) != enabled.end()) order.push_back(r);
  }
  if (order.empty()) throw Error(ErrorCode::kNoRewards, "reward_schedule needs at least one enabled reward");
  return order[minibatch_index % order.size()];
}

SpanLogits span_logits(const Matrix& enc_states, const Matrix& dec_states, const SpanPredictorParams& params) {
  const std::size_t h = params.hidden;
  const Matrix enc = apply_layer(enc_states, params.enc_layer, h);
  const Matrix dec = apply_layer(dec_states, params.dec_layer, h);
  SpanLogits out;
  out.start = half_products(dec, enc, 0, h);
  out.end = half_products(dec, enc, h, h);
  return out;
}

double span_loss(const SpanLogits& logits, std::span<const GoldSpan> gold) {
  check_gold(logits, gold);
  double total = 0.0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    total += row_cross_entropy(logits.start.row(t), gold[t].start);
    total += row_cross_entropy(logits.end.row(t), gold[t].end);
  }
  return total / static_cast<double>(gold.size());
}

SpanLogits span_loss_gradient(const SpanLogits& logits, std::span<const GoldSpan> gold) {
  check_gold(logits, gold);
  SpanLogits g;
  g.start = Matrix(logits.start.rows, logits.start.cols);
  g.end = Matrix(logits.end.rows, logits.end.cols);
  const double scale = 1.0 / static_cast<double>(gold.size());
  const std::size_t cols = logits.start.cols;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    softmax_minus_onehot(logits.start.row(t), gold[t].start, scale, {g.start.data.data() + t * cols, cols});
    softmax_minus_onehot(logits.end.row(t), gold[t].end, scale, {g.end.data.data() + t * cols, cols});
  }
  return g;
}

std::vector<std::size_t> gold_spans(std::span<const std::string> targets, std::span<const std::string> sources,
                                    const Bm25Params& params) {
  if (sources.empty()) throw Error(ErrorCode::kEmptySource, "gold_spans needs source sentences");
  std::vector<std::size_t> out;
  out.reserve(targets.size());
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  };
  for (const auto& t : targets) {
    const auto exact = std::find_if(sources.begin(), sources.end(),
                                    [&](const std::string& s) { return trim(s) == trim(t); });
    if (exact != sources.end()) {
      out.push_back(static_cast<std::size_t>(exact - sources.begin()));
      continue;
    }
    const auto scores = bm25_scores(t, sources, params);
    out.push_back(argmax_lowest(scores));
  }
  return out;
}

SourceLayout layout_source(std::span<const std::string> sources, std::string_view marker) {
  SourceLayout layout;
  for (const auto& s : sources) {
    const std::size_t marker_pos = layout.tokens.size();
    layout.tokens.emplace_back(marker);
    const auto toks = whitespace_tokens(s);
    for (auto tok : toks) layout.tokens.emplace_back(tok);
    if (toks.empty()) {
      layout.sentence_spans.push_back({marker_pos, marker_pos});
    } else {
      layout.sentence_spans.push_back({marker_pos + 1, layout.tokens.size() - 1});
    }
  }
  return layout;
}

std::vector<GoldSpan> step_spans(std::span<const std::string> targets, std::span<const std::size_t> gold_sentence,
                                 const SourceLayout& layout) {
  if (targets.size() != gold_sentence.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one gold sentence per target sentence is required");
  }
  std::vector<GoldSpan> steps;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (gold_sentence[i] >= layout.sentence_spans.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "gold sentence index beyond the source");
    }
    const auto span = layout.sentence_spans[gold_sentence[i]];
    steps.insert(steps.end(), whitespace_tokens(targets[i]).size(), span);
  }
  return steps;
}

}  // namespace mpsumm
