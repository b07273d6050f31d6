#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpsumm/clusterer.hpp"
#include "mpsumm/providers.hpp"

namespace mpsumm {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Length of the longest common subsequence.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// ROUGE-L over ASCII-lowercased whitespace tokens; each text is one token
/// sequence. P = LCS/|candidate|, R = LCS/|reference|, F1 with beta = 1.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);
RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Mean over summary sentences of the highest entailment probability over
/// source sentences. `entail` is row-major [summary x source].
double nli_score(std::span<const double> entail, std::size_t summary_count, std::size_t source_count);
double nli_score(std::span<const std::string> summary, std::span<const std::string> source,
                 Provider& provider);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct ProjectedPoints {
  std::vector<Point2> points;
  std::array<std::vector<double>, 2> projection;  // orthonormal rows in embedding space
  std::array<double, 2> singular_values{};
};

/// Mean-centers the rows and projects them on the top two right singular
/// vectors of the centered matrix (Jacobi SVD). Each component's
/// largest-magnitude coordinate is made positive (first index on ties). When
/// the data has rank < 2 the missing row is completed to an orthonormal basis.
ProjectedPoints pca_project(std::span<const EmbeddingVector> embeddings);

/// Andrew's monotone chain; counter-clockwise, no collinear points kept.
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Absolute shoelace area of a polygon given in vertex order.
double shoelace_area(std::span<const Point2> polygon);

/// Area of the convex hull of the PCA projection. Exactly 0 for fewer than
/// three points or when the centered data has rank < 2 (collinear).
double semantic_area(std::span<const EmbeddingVector> embeddings);
double semantic_area(std::span<const std::string> summary, Provider& provider);

/// Min-max normalization over one candidate set; an all-equal set maps to 0.5.
std::vector<double> normalize_area(std::span<const double> raw);

struct RewardBundle {
  double rouge_l = 0.0;
  double nli = 0.0;
  double semantic_area = 0.0;  // normalized
};

double compression_ratio(std::size_t source_tokens, std::size_t summary_tokens);

/// Share of summary term occurrences whose term never occurs in the source.
double novel_unigram_rate(std::span<const std::string> summary, std::span<const std::string> source);

struct StatsInput {
  std::string question;
  std::vector<std::string> source_sentences;
  std::vector<std::string> bullets;
  std::optional<bool> factoid;
};

struct DatasetStats {
  std::size_t count = 0;
  double mean_question_tokens = 0.0;
  double mean_source_tokens = 0.0;
  double mean_summary_tokens = 0.0;
  double mean_bullets = 0.0;
  double mean_compression = 0.0;
  double novel_unigram_pct = 0.0;  // per-example rate averaged, in percent
  std::optional<double> factoid_pct;  // over examples carrying the flag

  std::string table() const;
  std::string record() const;
};

DatasetStats dataset_stats(std::span<const StatsInput> examples);

}  // namespace mpsumm
