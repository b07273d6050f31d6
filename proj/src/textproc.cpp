#include "mpsumm/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "mpsumm/error.hpp"
#include "mpsumm/hash.hpp"

namespace mpsumm {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.substr(pos, prefix.size()) == prefix;
}

// Length of a closing quote or bracket at pos, 0 if none.
std::size_t closer_length(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with(s, pos, "\xE2\x80\x9D") || starts_with(s, pos, "\xE2\x80\x99")) return 3;
  return 0;
}

// Whether the character at pos can open a new sentence.
bool opens_sentence(std::string_view s, std::size_t pos) {
  const unsigned char c = static_cast<unsigned char>(s[pos]);
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  if (starts_with(s, pos, "\xE2\x80\x9C") || starts_with(s, pos, "\xE2\x80\x98")) return true;
  // Latin-1 supplement uppercase letters U+00C0..U+00DE except U+00D7.
  if (c == 0xC3 && pos + 1 < s.size()) {
    const unsigned char d = static_cast<unsigned char>(s[pos + 1]);
    return d >= 0x80 && d <= 0x9E && d != 0x97;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Word that ends just before a period at `dot`, lowercased, leading
// punctuation removed.
std::string word_before(std::string_view s, std::size_t sentence_start, std::size_t dot) {
  std::size_t b = dot;
  while (b > sentence_start && !is_space(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string w;
  for (std::size_t i = b; i < dot; ++i) w.push_back(ascii_lower(s[i]));
  std::size_t lead = 0;
  while (lead < w.size() && std::ispunct(static_cast<unsigned char>(w[lead])) != 0) ++lead;
  return w.substr(lead);
}

std::vector<std::string> split_terms(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view tok : whitespace_tokens(text)) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(tok[b])) != 0) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1])) != 0) --e;
    if (b == e) continue;
    std::string term;
    term.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) term.push_back(ascii_lower(tok[i]));
    out.push_back(std::move(term));
  }
  return out;
}

}  // namespace

AbbreviationList::AbbreviationList()
    : entries_{"mr",   "mrs",  "ms",   "dr",   "prof", "sr",  "jr",  "st",  "vs",  "etc",
               "e.g",  "i.e",  "inc",  "ltd",  "co",   "corp", "jan", "feb", "mar", "apr",
               "jun",  "jul",  "aug",  "sep",  "sept", "oct", "nov", "dec", "approx",
               "fig",  "vol",  "mt",   "ave",  "u.s",  "dept", "est", "a.m", "p.m"} {}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open abbreviation list " + path.string());
  std::set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::string entry;
    for (char c : t) entry.push_back(ascii_lower(c));
    while (!entry.empty() && entry.back() == '.') entry.pop_back();
    if (!entry.empty()) entries.insert(std::move(entry));
  }
  return AbbreviationList(std::move(entries));
}

bool AbbreviationList::contains(std::string_view token) const {
  return entries_.count(std::string(token)) != 0;
}

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t b = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > b) out.push_back(text.substr(b, i - b));
  }
  return out;
}

std::vector<std::string> terms(std::string_view text) { return split_terms(text); }

std::size_t code_points(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

SentenceUnit make_sentence(SentenceId id, std::string text) {
  SentenceUnit u;
  u.id = std::move(id);
  for (std::string_view tok : whitespace_tokens(text)) {
    ++u.word_count;
    u.char_max_token = std::max(u.char_max_token, code_points(tok));
  }
  u.text = std::move(text);
  return u;
}

std::vector<std::string> split_sentences(std::string_view text, const AbbreviationList& abbreviations) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string_view s = trim(text.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
  };

  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      std::size_t j = i;
      int newlines = 0;
      while (j < n && is_space(static_cast<unsigned char>(text[j]))) {
        if (text[j] == '\n') ++newlines;
        ++j;
      }
      if (newlines >= 2) {
        emit(i);
        start = j;
      }
      i = j;
      continue;
    }
    if (!is_terminal(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminal(text[j])) ++j;
    const bool single_period = (j - i == 1) && c == '.';
    while (j < n) {
      const std::size_t len = closer_length(text, j);
      if (len == 0) break;
      j += len;
    }
    if (j >= n || !is_space(static_cast<unsigned char>(text[j]))) {
      i = j;
      continue;
    }
    std::size_t m = j;
    while (m < n && is_space(static_cast<unsigned char>(text[m]))) ++m;
    if (m >= n || !opens_sentence(text, m)) {
      i = j;
      continue;
    }
    if (single_period) {
      const std::string w = word_before(text, start, i);
      const bool initial = w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0])) != 0;
      if (initial || abbreviations.contains(w)) {
        i = j;
        continue;
      }
    }
    emit(j);
    start = m;
    i = m;
  }
  emit(n);
  return out;
}

std::vector<SentenceUnit> segment(std::string_view text, std::string_view answer_id,
                                  const AbbreviationList& abbreviations) {
  std::vector<SentenceUnit> units;
  std::size_t index = 0;
  for (auto& s : split_sentences(text, abbreviations)) {
    units.push_back(make_sentence({std::string(answer_id), index++}, std::move(s)));
  }
  return units;
}

double bm25_idf(std::size_t corpus_size, std::size_t document_frequency) {
  const double n = static_cast<double>(corpus_size);
  const double df = static_cast<double>(document_frequency);
  return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5) + 1.0));
}

std::vector<double> bm25_scores(std::string_view query, std::span<const std::string> corpus,
                                const Bm25Params& params) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "bm25_scores needs at least one document");
  std::vector<std::map<std::string, std::size_t>> tf(corpus.size());
  std::vector<double> length(corpus.size(), 0.0);
  std::map<std::string, std::size_t> df;
  double total_length = 0.0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto& t : split_terms(corpus[d])) ++tf[d][std::move(t)];
    for (const auto& [term, count] : tf[d]) {
      ++df[term];
      length[d] += static_cast<double>(count);
    }
    total_length += length[d];
  }
  const double avgdl = total_length / static_cast<double>(corpus.size());

  std::set<std::string> query_terms;
  for (auto& t : split_terms(query)) query_terms.insert(std::move(t));

  std::vector<double> scores(corpus.size(), 0.0);
  if (avgdl <= 0.0) return scores;
  for (const auto& term : query_terms) {
    auto it = df.find(term);
    if (it == df.end()) continue;
    const double idf = bm25_idf(corpus.size(), it->second);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      auto f = tf[d].find(term);
      if (f == tf[d].end()) continue;
      const double freq = static_cast<double>(f->second);
      const double norm = params.k1 * (1.0 - params.b + params.b * length[d] / avgdl);
      scores[d] += idf * freq * (params.k1 + 1.0) / (freq + norm);
    }
  }
  return scores;
}

std::vector<double> bm25_scores(const SentenceUnit& query, std::span<const SentenceUnit> corpus,
                                const Bm25Params& params) {
  std::vector<std::string> docs;
  docs.reserve(corpus.size());
  for (const auto& s : corpus) docs.push_back(s.text);
  return bm25_scores(query.text, docs, params);
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

HashedFeature hash_feature(std::string_view term, std::size_t dim) {
  const std::uint64_t h = fnv1a64(term, kFnvOffsetBasis ^ kFeatureHashSeed);
  return {static_cast<std::size_t>(h % dim), (h >> 63) != 0 ? -1.0 : 1.0};
}

std::vector<EmbeddingVector> tfidf_embed(std::span<const std::string> sentences, std::size_t dim) {
  if (dim < 16) throw Error(ErrorCode::kInvalidConfig, "tfidf_embed needs dim >= 16");
  std::vector<std::map<std::string, std::size_t>> tf(sentences.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (auto& t : split_terms(sentences[i])) ++tf[i][std::move(t)];
    for (const auto& entry : tf[i]) ++df[entry.first];
  }
  std::vector<EmbeddingVector> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    EmbeddingVector v(dim, 0.0);
    for (const auto& [term, count] : tf[i]) {
      const auto f = hash_feature(term, dim);
      v[f.bucket] += f.sign * static_cast<double>(count) * bm25_idf(sentences.size(), df[term]);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
      const auto f = hash_feature("\x01" + sentences[i], dim);
      v[f.bucket] = f.sign;
      norm = 1.0;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> tfidf_embed(std::span<const SentenceUnit> sentences, std::size_t dim) {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  return tfidf_embed(texts, dim);
}

}  // namespace mpsumm
