#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpsumm/textproc.hpp"

namespace mpsumm {

// Row-major dense matrix; enough for the span head arithmetic.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Teacher-forced negative log-likelihood: -sum of per-step log-probabilities.
double nll_loss(std::span<const double> logp);

/// Self-critical loss, terms ordered as printed:
/// (r_greedy - r_sample) * sum_t logp_sample[t].
double rl_loss(double r_greedy, double r_sample, std::span<const double> sample_logp);

struct LossWeights {
  double gamma_rl = 0.0;
  double gamma_ml = 1.0;
  double gamma_span = 0.0;
};

inline constexpr LossWeights kRlPreset{0.9, 0.1, 0.0};
inline constexpr LossWeights kSpanPreset{0.0, 1.0, 1.0};
inline constexpr LossWeights kAllLossesPreset{0.9, 0.5, 0.01};

/// gamma_rl * l_rl + gamma_ml * l_ml + gamma_span * l_span.
double mixed_loss(double l_rl, double l_ml, double l_span, const LossWeights& w);

enum class RewardName { kRougeL, kNli, kSemanticArea };
std::string_view to_string(RewardName r);

/// Round-robin over the enabled rewards in the fixed order rouge_l, nli,
/// semantic_area (duplicates ignored).
RewardName reward_schedule(std::size_t minibatch_index, std::span<const RewardName> enabled);

// Affine map in -> 2 * half: output = W x + bias, W is [2*half x in].
struct AffineLayer {
  Matrix weight;
  std::vector<double> bias;
};

struct SpanPredictorParams {
  std::size_t hidden = 1024;  // encoder and decoder width; outputs are 2 * hidden wide
  AffineLayer enc_layer;
  AffineLayer dec_layer;
};

struct SpanLogits {
  Matrix start;  // [target_len x source_len]
  Matrix end;
};

/// Projects encoder rows [source x hidden] and decoder rows [target x hidden]
/// through their layers, splits each 2*hidden output into start and end
/// halves, and takes decoder-by-encoder inner products.
SpanLogits span_logits(const Matrix& enc_states, const Matrix& dec_states,
                       const SpanPredictorParams& params);

struct GoldSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

/// Mean over target steps of CE(softmax(start row), start) + CE(softmax(end row), end).
double span_loss(const SpanLogits& logits, std::span<const GoldSpan> gold);

/// Analytic gradient of span_loss w.r.t. each logit: (softmax - onehot) / T per row.
SpanLogits span_loss_gradient(const SpanLogits& logits, std::span<const GoldSpan> gold);

/// Per target sentence, the BM25-argmax source sentence (lowest index on ties).
/// A source sentence equal to the target (ignoring surrounding whitespace) is
/// taken first.
std::vector<std::size_t> gold_spans(std::span<const std::string> targets,
                                    std::span<const std::string> sources,
                                    const Bm25Params& params = {});

inline constexpr std::string_view kSentenceMarker = "</s>";

// Source token layout with a boundary marker before every sentence:
//   </s> s0_tok0 s0_tok1 ... </s> s1_tok0 ...
struct SourceLayout {
  std::vector<std::string> tokens;
  std::vector<GoldSpan> sentence_spans;  // first and last token of each sentence
};

/// Sentences with no tokens span their own marker.
SourceLayout layout_source(std::span<const std::string> sources,
                           std::string_view marker = kSentenceMarker);

/// Repeats each target sentence's gold span over all of its decoding steps
/// (one step per whitespace token of the target sentence).
std::vector<GoldSpan> step_spans(std::span<const std::string> targets,
                                 std::span<const std::size_t> gold_sentence,
                                 const SourceLayout& layout);

}  // namespace mpsumm
