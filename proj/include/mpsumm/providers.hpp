#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mpsumm/textproc.hpp"

namespace mpsumm {

enum class ScorerOp { kRelevance, kEmbed, kNli, kEntities };
enum class Concurrency { kConcurrent, kSerialized };

std::string_view to_string(ScorerOp op);
std::string_view to_string(Concurrency c);

struct ScorerCapabilities {
  std::set<ScorerOp> supports;
  std::size_t embed_dim = 0;  // meaningful only when kEmbed is supported
  Concurrency concurrency = Concurrency::kConcurrent;

  bool has(ScorerOp op) const { return supports.count(op) != 0; }
};

struct NliJudgment {
  double entail = 0.0;
  double neutral = 1.0;
  double contradict = 0.0;

  enum class Label { kEntail, kNeutral, kContradict };
  /// Highest-probability class; ties resolve in the order entail, neutral, contradict.
  Label argmax() const;
};

struct RelevanceScore {
  double prob_relevant = 0.0;
};

// Source of every model judgment the pipeline consumes. Implementations must be
// referentially transparent per (configuration, input).
class Provider {
 public:
  virtual ~Provider() = default;

  virtual ScorerCapabilities capabilities() const = 0;
  virtual RelevanceScore relevance(std::string_view question, std::string_view sentence) = 0;
  virtual NliJudgment nli(std::string_view premise, std::string_view hypothesis) = 0;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& sentences) = 0;
  virtual std::set<std::string> entities(std::string_view text) = 0;

  /// Short human-readable identity, folded into stage config digests.
  virtual std::string describe() const = 0;

 protected:
  void require(ScorerOp op) const;
};

/// Maximal runs of capitalized tokens plus all-digit tokens of length >= 4.
/// Lines and . ! ? terminate sentences; a sentence-initial capitalized token is
/// kept only if the same token also appears capitalized mid-sentence somewhere
/// in the text. The pronoun "I" and its contractions are never entities.
std::set<std::string> lexical_entities(std::string_view text);

/// Lexical relevance: |content(question) ∩ terms(sentence)| / |content(question)|,
/// where content words are terms not in the stopword list. 0 when either side is empty.
double lexical_relevance(std::string_view question, std::string_view sentence);

/// Lexical NLI. With c = share of hypothesis content words present in the premise
/// and m = 1 when exactly one side carries a negation cue:
/// entail = 0.05 + 0.9 c (1 - m), contradict = 0.05 + 0.9 c m, neutral = 0.9 (1 - c).
NliJudgment lexical_nli(std::string_view premise, std::string_view hypothesis);

bool is_stopword(std::string_view term);

// Hermetic fallback: no model files, lower fidelity than the neural sidecar.
class LexicalProvider final : public Provider {
 public:
  explicit LexicalProvider(std::size_t embed_dim = 4096) : embed_dim_(embed_dim) {}

  ScorerCapabilities capabilities() const override;
  RelevanceScore relevance(std::string_view question, std::string_view sentence) override;
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
  /// Hashed TF-IDF; IDF statistics cover the sentences of one call.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& sentences) override;
  std::set<std::string> entities(std::string_view text) override;
  std::string describe() const override;

 private:
  std::size_t embed_dim_;
};

// Precomputed judgments, one record per line:
//   {"op":"relevance","key":K,"prob":p}
//   {"op":"nli","key":K,"entail":e,"neutral":n,"contradict":c}
//   {"op":"embed","key":K,"vector":[...]}
//   {"op":"entities","key":K,"entities":[...]}
// K is content_key(text) for embed/entities and content_key(a, b) for the pair
// ops (question+sentence, premise+hypothesis). An optional "text" field is ignored.
class FileProvider final : public Provider {
 public:
  static std::unique_ptr<FileProvider> load(const std::filesystem::path& path);
  static std::unique_ptr<FileProvider> parse(std::istream& in, std::string origin);

  ScorerCapabilities capabilities() const override;
  RelevanceScore relevance(std::string_view question, std::string_view sentence) override;
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& sentences) override;
  std::set<std::string> entities(std::string_view text) override;
  std::string describe() const override;

 private:
  FileProvider() = default;

  std::string origin_;
  std::string digest_;
  ScorerCapabilities caps_;
  std::unordered_map<std::string, double> relevance_;
  std::unordered_map<std::string, NliJudgment> nli_;
  std::unordered_map<std::string, EmbeddingVector> embed_;
  std::unordered_map<std::string, std::set<std::string>> entities_;
};

// Line transport to a sidecar process or socket.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Returns nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

/// Spawns `command` through /bin/sh and talks over its stdin/stdout.
std::unique_ptr<LineChannel> spawn_channel(const std::string& command);
/// Connects to host:port over TCP.
std::unique_ptr<LineChannel> tcp_channel(const std::string& host, std::uint16_t port);
/// Wraps an already-open pair of file descriptors (read end, write end); takes ownership.
std::unique_ptr<LineChannel> fd_channel(int read_fd, int write_fd);

// Client for the newline-delimited sidecar protocol. Requests carry an integer
// id; responses {"id","ok","result"} are matched by id. The first exchange is
// the capabilities handshake. Under SERIALIZED at most one request is in flight;
// under CONCURRENT requests are pipelined and responses may arrive in any order.
class SidecarProvider final : public Provider {
 public:
  explicit SidecarProvider(std::unique_ptr<LineChannel> channel, std::string description = "sidecar");
  ~SidecarProvider() override;

  ScorerCapabilities capabilities() const override { return caps_; }
  RelevanceScore relevance(std::string_view question, std::string_view sentence) override;
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& sentences) override;
  std::set<std::string> entities(std::string_view text) override;
  std::string describe() const override { return description_; }

  /// Sends one request object (the id is assigned here) and returns "result".
  /// Throws kProviderUnavailable when the channel closes or the sidecar reports ok=false.
  nlohmann::json call(std::string_view op, nlohmann::json fields = nlohmann::json::object());

 private:
  std::string exchange(std::int64_t id, const std::string& line);

  std::unique_ptr<LineChannel> channel_;
  std::string description_;
  ScorerCapabilities caps_;

  std::mutex serial_mutex_;  // held across a whole exchange under SERIALIZED
  std::mutex write_mutex_;
  std::mutex state_mutex_;
  std::condition_variable arrived_;
  bool reader_active_ = false;
  bool closed_ = false;
  std::int64_t next_id_ = 1;
  std::map<std::int64_t, std::string> pending_;  // id -> raw response line
};

/// Provider from a CLI spec: "lexical", "file:PATH", "sidecar:COMMAND",
/// or "sidecar:tcp://HOST:PORT".
std::unique_ptr<Provider> make_provider(const std::string& spec, std::size_t lexical_dim = 4096);

}  // namespace mpsumm
