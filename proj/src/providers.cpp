#include "mpsumm/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mpsumm/error.hpp"
#include "mpsumm/hash.hpp"

namespace mpsumm {

namespace {

using json = nlohmann::json;

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "above", "after", "again", "all",   "also",  "am",    "an",    "and",
      "any",   "are",   "as",    "at",    "be",    "been",  "before", "being", "below", "between",
      "both",  "but",   "by",    "can",   "could", "did",   "do",    "does",  "doing", "down",
      "during", "each", "few",   "for",   "from",  "further", "get", "got",   "had",   "has",
      "have",  "having", "he",   "her",   "here",  "hers",  "herself", "him", "himself", "his",
      "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",   "itself", "just",
      "me",    "more",  "most",  "my",    "myself", "of",   "off",   "on",    "once",  "only",
      "or",    "other", "our",   "ours",  "out",   "over",  "own",   "same",  "she",   "should",
      "so",    "some",  "such",  "than",  "that",  "the",   "their", "theirs", "them", "then",
      "there", "these", "they",  "this",  "those", "through", "to",  "too",   "under", "until",
      "up",    "very",  "was",   "we",    "were",  "what",  "when",  "where", "which", "while",
      "who",   "whom",  "why",   "will",  "with",  "would", "you",   "your",  "yours", "yourself",
      "im",    "i'm",   "ive",   "i've",  "it's",  "you're", "really", "much", "many", "one"};
  return words;
}

bool is_negation(std::string_view term) {
  static const std::set<std::string, std::less<>> cues = {
      "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "cannot", "without"};
  if (cues.count(term) != 0) return true;
  return term.size() > 3 && term.substr(term.size() - 3) == "n't";
}

std::set<std::string> content_words(std::string_view text) {
  std::set<std::string> out;
  for (auto& t : terms(text)) {
    if (!is_stopword(t) && !is_negation(t)) out.insert(std::move(t));
  }
  return out;
}

bool has_ending_punct(std::string_view raw) {
  std::size_t e = raw.size();
  while (e > 0) {
    const char c = raw[e - 1];
    if (c == '"' || c == '\'' || c == ')' || c == ']') {
      --e;
      continue;
    }
    return c == '.' || c == '!' || c == '?';
  }
  return false;
}

struct EntityToken {
  std::string core;
  bool initial = false;
  bool lead_punct = false;
  bool trail_punct = false;
};

std::vector<std::vector<EntityToken>> entity_lines(std::string_view text) {
  std::vector<std::vector<EntityToken>> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::vector<EntityToken> toks;
    bool initial = true;
    for (std::string_view raw : whitespace_tokens(text.substr(pos, nl - pos))) {
      std::size_t b = 0;
      std::size_t e = raw.size();
      while (b < e && std::ispunct(static_cast<unsigned char>(raw[b])) != 0) ++b;
      while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1])) != 0) --e;
      toks.push_back({std::string(raw.substr(b, e - b)), initial, b > 0, e < raw.size()});
      initial = has_ending_punct(raw);
    }
    lines.push_back(std::move(toks));
    pos = nl + 1;
  }
  return lines;
}

bool is_first_person(std::string_view core) {
  return core == "I" || (core.size() > 2 && core[0] == 'I' && core[1] == '\'');
}

bool is_capitalized(std::string_view core) {
  return !core.empty() && core[0] >= 'A' && core[0] <= 'Z' && !is_first_person(core);
}

bool is_year_like(std::string_view core) {
  return core.size() >= 4 &&
         std::all_of(core.begin(), core.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void check_probability(double p, const char* what) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw Error(ErrorCode::kMalformedRecord, std::string(what) + " must be a probability, got " + std::to_string(p));
  }
}

NliJudgment parse_nli(const json& j) {
  NliJudgment out{j.at("entail").get<double>(), j.at("neutral").get<double>(),
                  j.at("contradict").get<double>()};
  check_probability(out.entail, "entail");
  check_probability(out.neutral, "neutral");
  check_probability(out.contradict, "contradict");
  if (std::abs(out.entail + out.neutral + out.contradict - 1.0) > 1e-6) {
    throw Error(ErrorCode::kMalformedRecord, "NLI probabilities must sum to 1");
  }
  return out;
}

std::optional<ScorerOp> parse_op(std::string_view raw) {
  std::string name(raw);
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "relevance") return ScorerOp::kRelevance;
  if (name == "embed") return ScorerOp::kEmbed;
  if (name == "nli") return ScorerOp::kNli;
  if (name == "entities") return ScorerOp::kEntities;
  return std::nullopt;
}

ScorerCapabilities parse_capabilities(const json& result) {
  ScorerCapabilities caps;
  for (const auto& op : result.at("supports")) {
    if (auto parsed = parse_op(op.get<std::string>())) caps.supports.insert(*parsed);
  }
  if (caps.has(ScorerOp::kEmbed)) caps.embed_dim = result.at("embed_dim").get<std::size_t>();
  const std::string conc = result.value("concurrency", std::string("SERIALIZED"));
  caps.concurrency = conc == "CONCURRENT" ? Concurrency::kConcurrent : Concurrency::kSerialized;
  return caps;
}

}  // namespace

std::string_view to_string(ScorerOp op) {
  switch (op) {
    case ScorerOp::kRelevance: return "relevance";
    case ScorerOp::kEmbed: return "embed";
    case ScorerOp::kNli: return "nli";
    case ScorerOp::kEntities: return "entities";
  }
  return "unknown";
}

std::string_view to_string(Concurrency c) {
  return c == Concurrency::kConcurrent ? "CONCURRENT" : "SERIALIZED";
}

NliJudgment::Label NliJudgment::argmax() const {
  if (entail >= neutral && entail >= contradict) return Label::kEntail;
  if (neutral >= contradict) return Label::kNeutral;
  return Label::kContradict;
}

void Provider::require(ScorerOp op) const {
  if (!capabilities().has(op)) {
    throw Error(ErrorCode::kUnsupportedOp, describe() + " does not support " + std::string(to_string(op)));
  }
}

bool is_stopword(std::string_view term) { return stopwords().count(term) != 0; }

double lexical_relevance(std::string_view question, std::string_view sentence) {
  const auto q = content_words(question);
  if (q.empty()) return 0.0;
  std::set<std::string> s;
  for (auto& t : terms(sentence)) s.insert(std::move(t));
  if (s.empty()) return 0.0;
  const auto shared = std::count_if(q.begin(), q.end(), [&](const std::string& w) { return s.count(w) != 0; });
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

NliJudgment lexical_nli(std::string_view premise, std::string_view hypothesis) {
  std::set<std::string> p;
  bool neg_p = false;
  for (auto& t : terms(premise)) {
    neg_p = neg_p || is_negation(t);
    p.insert(std::move(t));
  }
  bool neg_h = false;
  for (const auto& t : terms(hypothesis)) neg_h = neg_h || is_negation(t);

  auto h = content_words(hypothesis);
  if (h.empty()) {
    for (auto& t : terms(hypothesis)) {
      if (!is_negation(t)) h.insert(std::move(t));
    }
  }
  double coverage = 0.0;
  if (!h.empty()) {
    const auto shared = std::count_if(h.begin(), h.end(), [&](const std::string& w) { return p.count(w) != 0; });
    coverage = static_cast<double>(shared) / static_cast<double>(h.size());
  }
  const double mismatch = (neg_p != neg_h) ? 1.0 : 0.0;
  NliJudgment j;
  j.entail = 0.05 + 0.9 * coverage * (1.0 - mismatch);
  j.contradict = 0.05 + 0.9 * coverage * mismatch;
  j.neutral = 0.9 * (1.0 - coverage);
  return j;
}

std::set<std::string> lexical_entities(std::string_view text) {
  const auto lines = entity_lines(text);
  std::set<std::string> mid_caps;
  for (const auto& line : lines) {
    for (const auto& t : line) {
      if (!t.initial && is_capitalized(t.core)) mid_caps.insert(t.core);
    }
  }
  std::set<std::string> out;
  for (const auto& line : lines) {
    std::string run;
    auto flush = [&] {
      if (!run.empty()) out.insert(run);
      run.clear();
    };
    for (const auto& t : line) {
      if (is_year_like(t.core)) {
        flush();
        out.insert(t.core);
        continue;
      }
      const bool keep = is_capitalized(t.core) && (!t.initial || mid_caps.count(t.core) != 0);
      if (!keep) {
        flush();
        continue;
      }
      if (t.lead_punct) flush();
      if (!run.empty()) run.push_back(' ');
      run += t.core;
      if (t.trail_punct) flush();
    }
    flush();
  }
  return out;
}

// ---- LexicalProvider ----

ScorerCapabilities LexicalProvider::capabilities() const {
  return {{ScorerOp::kRelevance, ScorerOp::kEmbed, ScorerOp::kNli, ScorerOp::kEntities},
          embed_dim_,
          Concurrency::kConcurrent};
}

RelevanceScore LexicalProvider::relevance(std::string_view question, std::string_view sentence) {
  return {lexical_relevance(question, sentence)};
}

NliJudgment LexicalProvider::nli(std::string_view premise, std::string_view hypothesis) {
  return lexical_nli(premise, hypothesis);
}

std::vector<EmbeddingVector> LexicalProvider::embed(const std::vector<std::string>& sentences) {
  if (sentences.empty()) return {};
  return tfidf_embed(sentences, embed_dim_);
}

std::set<std::string> LexicalProvider::entities(std::string_view text) { return lexical_entities(text); }

std::string LexicalProvider::describe() const { return "lexical:" + std::to_string(embed_dim_); }

// ---- FileProvider ----

std::unique_ptr<FileProvider> FileProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open score file " + path.string());
  return parse(in, path.string());
}

std::unique_ptr<FileProvider> FileProvider::parse(std::istream& in, std::string origin) {
  std::unique_ptr<FileProvider> fp(new FileProvider());
  fp->origin_ = std::move(origin);
  fp->caps_.concurrency = Concurrency::kConcurrent;
  std::uint64_t digest = kFnvOffsetBasis;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    digest = fnv1a64(line, digest);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fp->origin_ + ":" + std::to_string(line_number);
    json rec;
    try {
      rec = json::parse(line);
      const auto op = parse_op(rec.at("op").get<std::string>());
      if (!op) throw Error(ErrorCode::kMalformedRecord, "unknown op");
      std::string key;
      if (rec.contains("key")) {
        key = rec.at("key").get<std::string>();
      } else if (*op == ScorerOp::kRelevance) {
        key = content_key(rec.at("question").get<std::string>(), rec.at("sentence").get<std::string>());
      } else if (*op == ScorerOp::kNli) {
        key = content_key(rec.at("premise").get<std::string>(), rec.at("hypothesis").get<std::string>());
      } else {
        key = content_key(rec.at("text").get<std::string>());
      }
      fp->caps_.supports.insert(*op);
      switch (*op) {
        case ScorerOp::kRelevance: {
          const double p = rec.at("prob").get<double>();
          check_probability(p, "prob");
          fp->relevance_[key] = p;
          break;
        }
        case ScorerOp::kNli:
          fp->nli_[key] = parse_nli(rec);
          break;
        case ScorerOp::kEmbed: {
          auto v = rec.at("vector").get<EmbeddingVector>();
          if (v.empty()) throw Error(ErrorCode::kDimMismatch, "empty vector");
          if (fp->caps_.embed_dim == 0) fp->caps_.embed_dim = v.size();
          if (v.size() != fp->caps_.embed_dim) {
            throw Error(ErrorCode::kDimMismatch, where + ": vector of width " + std::to_string(v.size()) +
                                                     ", expected " + std::to_string(fp->caps_.embed_dim));
          }
          fp->embed_[key] = std::move(v);
          break;
        }
        case ScorerOp::kEntities:
          fp->entities_[key] = rec.at("entities").get<std::set<std::string>>();
          break;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDimMismatch) throw;
      throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
    }
  }
  fp->digest_ = hex64(digest);
  return fp;
}

ScorerCapabilities FileProvider::capabilities() const { return caps_; }

RelevanceScore FileProvider::relevance(std::string_view question, std::string_view sentence) {
  require(ScorerOp::kRelevance);
  auto it = relevance_.find(content_key(question, sentence));
  if (it == relevance_.end()) throw Error(ErrorCode::kMissingScore, "no relevance entry for sentence");
  return {it->second};
}

NliJudgment FileProvider::nli(std::string_view premise, std::string_view hypothesis) {
  require(ScorerOp::kNli);
  auto it = nli_.find(content_key(premise, hypothesis));
  if (it == nli_.end()) throw Error(ErrorCode::kMissingScore, "no nli entry for pair");
  return it->second;
}

std::vector<EmbeddingVector> FileProvider::embed(const std::vector<std::string>& sentences) {
  require(ScorerOp::kEmbed);
  std::vector<EmbeddingVector> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto it = embed_.find(content_key(s));
    if (it == embed_.end()) throw Error(ErrorCode::kMissingScore, "no embedding for \"" + s + "\"");
    out.push_back(it->second);
  }
  return out;
}

std::set<std::string> FileProvider::entities(std::string_view text) {
  require(ScorerOp::kEntities);
  auto it = entities_.find(content_key(text));
  if (it == entities_.end()) throw Error(ErrorCode::kMissingScore, "no entities entry for text");
  return it->second;
}

std::string FileProvider::describe() const { return "file:" + origin_ + "@" + digest_; }

// ---- SidecarProvider ----

SidecarProvider::SidecarProvider(std::unique_ptr<LineChannel> channel, std::string description)
    : channel_(std::move(channel)), description_(std::move(description)) {
  // The handshake always runs serialized; the declared mode applies afterwards.
  caps_.concurrency = Concurrency::kSerialized;
  const json response = json::parse(exchange(0, json{{"id", 0}, {"op", "capabilities"}}.dump()));
  if (!response.value("ok", false)) {
    throw Error(ErrorCode::kProviderUnavailable, description_ + ": capabilities handshake failed");
  }
  try {
    caps_ = parse_capabilities(response.at("result"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable, description_ + ": bad capabilities: " + e.what());
  }
}

SidecarProvider::~SidecarProvider() = default;

std::string SidecarProvider::exchange(std::int64_t id, const std::string& line) {
  auto response_id = [](const std::string& raw) -> std::optional<std::int64_t> {
    try {
      const json j = json::parse(raw);
      if (j.contains("id") && j["id"].is_number_integer()) return j["id"].get<std::int64_t>();
    } catch (const json::exception&) {
    }
    return std::nullopt;
  };

  if (caps_.concurrency == Concurrency::kSerialized) {
    std::lock_guard<std::mutex> lock(serial_mutex_);
    if (closed_) throw Error(ErrorCode::kProviderUnavailable, description_ + ": channel closed");
    channel_->write_line(line);
    while (true) {
      auto raw = channel_->read_line();
      if (!raw) {
        closed_ = true;
        throw Error(ErrorCode::kProviderUnavailable, description_ + ": sidecar closed the stream");
      }
      const auto rid = response_id(*raw);
      if (rid && *rid == id) return *raw;
      if (!rid) throw Error(ErrorCode::kProviderUnavailable, description_ + ": unparseable response");
    }
  }

  {
    std::lock_guard<std::mutex> lock(write_mutex_);
    channel_->write_line(line);
  }
  std::unique_lock<std::mutex> lock(state_mutex_);
  while (true) {
    if (auto it = pending_.find(id); it != pending_.end()) {
      std::string raw = std::move(it->second);
      pending_.erase(it);
      return raw;
    }
    if (closed_) throw Error(ErrorCode::kProviderUnavailable, description_ + ": sidecar closed the stream");
    if (reader_active_) {
      arrived_.wait(lock);
      continue;
    }
    reader_active_ = true;
    lock.unlock();
    auto raw = channel_->read_line();
    lock.lock();
    reader_active_ = false;
    if (!raw) {
      closed_ = true;
    } else if (auto rid = response_id(*raw)) {
      pending_[*rid] = std::move(*raw);
    }
    arrived_.notify_all();
  }
}

json SidecarProvider::call(std::string_view op, json fields) {
  std::int64_t id;
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    id = next_id_++;
  }
  fields["id"] = id;
  fields["op"] = std::string(op);
  const json response = json::parse(exchange(id, fields.dump()));
  if (!response.value("ok", false)) {
    const std::string err = response.contains("error") ? response["error"].dump() : "unknown error";
    throw Error(ErrorCode::kProviderUnavailable, description_ + ": " + std::string(op) + " failed: " + err);
  }
  return response.contains("result") ? response["result"] : json();
}

RelevanceScore SidecarProvider::relevance(std::string_view question, std::string_view sentence) {
  require(ScorerOp::kRelevance);
  const json r = call("relevance", {{"question", question}, {"sentence", sentence}});
  const double p = r.is_object() ? r.at("prob_relevant").get<double>() : r.get<double>();
  check_probability(p, "prob_relevant");
  return {p};
}

NliJudgment SidecarProvider::nli(std::string_view premise, std::string_view hypothesis) {
  require(ScorerOp::kNli);
  return parse_nli(call("nli", {{"premise", premise}, {"hypothesis", hypothesis}}));
}

std::vector<EmbeddingVector> SidecarProvider::embed(const std::vector<std::string>& sentences) {
  require(ScorerOp::kEmbed);
  if (sentences.empty()) return {};
  auto vectors = call("embed", {{"sentences", sentences}}).get<std::vector<EmbeddingVector>>();
  if (vectors.size() != sentences.size()) {
    throw Error(ErrorCode::kDimMismatch, "sidecar returned " + std::to_string(vectors.size()) + " vectors for " +
                                             std::to_string(sentences.size()) + " sentences");
  }
  for (const auto& v : vectors) {
    if (v.size() != caps_.embed_dim) {
      throw Error(ErrorCode::kDimMismatch, "sidecar vector of width " + std::to_string(v.size()));
    }
  }
  return vectors;
}

std::set<std::string> SidecarProvider::entities(std::string_view text) {
  require(ScorerOp::kEntities);
  return call("entities", {{"text", text}}).get<std::set<std::string>>();
}

// ---- factory ----

std::unique_ptr<Provider> make_provider(const std::string& spec, std::size_t lexical_dim) {
  if (spec == "lexical") return std::make_unique<LexicalProvider>(lexical_dim);
  if (spec.rfind("file:", 0) == 0) return FileProvider::load(spec.substr(5));
  if (spec.rfind("sidecar:", 0) == 0) {
    const std::string target = spec.substr(8);
    if (target.rfind("tcp://", 0) == 0) {
      const std::string hostport = target.substr(6);
      const auto colon = hostport.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorCode::kInvalidConfig, "sidecar tcp target needs HOST:PORT");
      const int port = std::stoi(hostport.substr(colon + 1));
      if (port <= 0 || port > 65535) throw Error(ErrorCode::kInvalidConfig, "bad port in " + spec);
      return std::make_unique<SidecarProvider>(tcp_channel(hostport.substr(0, colon), static_cast<std::uint16_t>(port)),
                                               spec);
    }
    return std::make_unique<SidecarProvider>(spawn_channel(target), spec);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown provider \"" + spec + "\" (lexical|file:PATH|sidecar:CMD)");
}

}  // namespace mpsumm
