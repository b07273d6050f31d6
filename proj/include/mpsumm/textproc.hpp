#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpsumm {

struct SentenceId {
  std::string answer_id;
  std::size_t index = 0;

  std::string str() const { return answer_id + ":" + std::to_string(index); }
  auto operator<=>(const SentenceId&) const = default;
};

struct SentenceUnit {
  SentenceId id;
  std::string text;
  std::size_t word_count = 0;
  std::size_t char_max_token = 0;  // longest whitespace token, in code points
};

/// Builds a unit for one sentence, filling the token statistics.
SentenceUnit make_sentence(SentenceId id, std::string text);

// Abbreviations are stored lowercase without the trailing period ("e.g", "dr").
class AbbreviationList {
 public:
  AbbreviationList();  // built-in English list
  explicit AbbreviationList(std::set<std::string> entries) : entries_(std::move(entries)) {}

  /// One abbreviation per line; blank lines and lines starting with '#' are skipped.
  static AbbreviationList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const;
  const std::set<std::string>& entries() const { return entries_; }

 private:
  std::set<std::string> entries_;
};

/// Rule-based sentence splitter. A boundary follows a run of . ! ? (plus any
/// closing quotes or brackets) when the next non-space character is an
/// uppercase letter, a digit, or an opening quote/bracket, unless the word
/// ending in '.' is a listed abbreviation or a single letter. A blank line is
/// also a boundary. Sentences are trimmed and never empty.
std::vector<std::string> split_sentences(std::string_view text,
                                         const AbbreviationList& abbreviations = {});

std::vector<SentenceUnit> segment(std::string_view text, std::string_view answer_id,
                                  const AbbreviationList& abbreviations = {});

std::vector<std::string_view> whitespace_tokens(std::string_view text);

/// Terms for lexical scoring: whitespace tokens, ASCII-lowercased, with leading
/// and trailing ASCII punctuation removed; tokens left empty are dropped.
std::vector<std::string> terms(std::string_view text);

/// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t code_points(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// ln((N - df + 0.5) / (df + 0.5) + 1), floored at zero.
double bm25_idf(std::size_t corpus_size, std::size_t document_frequency);

/// Okapi BM25 of `query` against every corpus document, using corpus-level
/// document frequencies and average length. Each distinct query term counts once.
std::vector<double> bm25_scores(std::string_view query, std::span<const std::string> corpus,
                                const Bm25Params& params = {});
std::vector<double> bm25_scores(const SentenceUnit& query, std::span<const SentenceUnit> corpus,
                                const Bm25Params& params = {});

/// Index of the maximum; the lowest index wins ties. Empty input returns 0.
std::size_t argmax_lowest(std::span<const double> values);

using EmbeddingVector = std::vector<double>;

inline constexpr std::uint64_t kFeatureHashSeed = 0x9E3779B97F4A7C15ULL;

struct HashedFeature {
  std::size_t bucket;
  double sign;
};

/// bucket = h mod dim and sign = (top bit of h) ? -1 : +1, where h is FNV-1a 64
/// of the term bytes with the offset basis XOR-ed with kFeatureHashSeed.
HashedFeature hash_feature(std::string_view term, std::size_t dim);

/// Signed, hashed TF-IDF vectors, L2-normalized. Term weight is raw count times
/// the BM25 IDF computed over `sentences` (always positive under the +1 form).
/// A sentence with no terms hashes its full text as a single feature, so every
/// output vector has unit norm. Requires dim >= 16.
std::vector<EmbeddingVector> tfidf_embed(std::span<const std::string> sentences, std::size_t dim);
std::vector<EmbeddingVector> tfidf_embed(std::span<const SentenceUnit> sentences, std::size_t dim);

}  // namespace mpsumm
