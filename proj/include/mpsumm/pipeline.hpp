#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpsumm/clusterer.hpp"
#include "mpsumm/corpus.hpp"
#include "mpsumm/filters.hpp"
#include "mpsumm/metrics.hpp"
#include "mpsumm/providers.hpp"

namespace mpsumm {

struct SplitFractions {
  double train = 0.916;
  double validation = 0.042;
  double test = 0.042;
};

struct PipelineConfig {
  std::string provider = "lexical";
  std::size_t embed_dim = 4096;  // lexical provider only
  double relevance_threshold = 0.5;
  ClusterParams cluster;
  ThreadHeuristics thread;
  FilterThresholds filter;
  SplitFractions split;
  std::uint64_t seed = 17;
  std::size_t workers = 1;
  std::string abbreviations;  // optional path; empty = built-in list

  /// Throws kInvalidConfig unless fractions sum to 1 (1e-9) and thresholds are positive.
  void validate() const;
  /// Canonical key=value rendering of everything that affects outputs (not workers).
  std::string canonical() const;
};

/// Applies one key=value setting; throws kInvalidConfig for unknown keys or bad values.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

/// Reads a config file: key = value per line, '#' starts a comment.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Per-thread sentence record after relevance scoring.
struct ScoredSentence {
  SentenceUnit unit;
  double relevance = 0.0;
  bool relevant = false;
};

struct ScoredThread {
  std::string id;
  std::string question;
  std::vector<ScoredSentence> sentences;
};

struct ClusteredThread {
  ScoredThread scored;
  std::vector<std::size_t> clustered;  // indices of relevant sentences
  Clustering clustering;
};

ScoredThread score_thread(const QAThread& thread, Provider& provider, double threshold,
                          const AbbreviationList& abbreviations);
ClusteredThread cluster_thread(ScoredThread scored, Provider& provider, const ClusterParams& params);
std::optional<SummaryExample> assemble_thread(const ClusteredThread& thread);

// JSON line records for the stage files.
std::string scored_record(const ScoredThread& t);
ScoredThread parse_scored(std::string_view line);
std::string clustered_record(const ClusteredThread& t);
ClusteredThread parse_clustered(std::string_view line);
/// Dataset record: {"id","question","source_sentences","summary_bullets","gold_spans","provenance"}.
std::string example_record(const SummaryExample& e);
SummaryExample parse_example(std::string_view line);
std::string filter_verdict_record(const std::string& id, const FilterVerdict& v);

/// Largest-remainder apportionment of n items over the fractions; returns
/// (train, validation, test) counts summing to n. Remainder ties go to the
/// earlier split.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& fractions);

/// Ranks ids by FNV-1a of "<seed>:<id>" (id breaks hash ties) and assigns the
/// first counts[0] to train, the next counts[1] to validation, the rest to test.
/// Returns the split index (0, 1, 2) for each input id.
std::vector<int> assign_splits(std::span<const std::string> ids, const SplitFractions& fractions,
                               std::uint64_t seed);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct PipelineResult {
  std::vector<QAThread> threads;
  std::vector<ThreadVerdict> thread_verdicts;
  std::vector<ScoredThread> scored;        // accepted threads only
  std::vector<ClusteredThread> clustered;  // accepted threads only
  std::vector<SummaryExample> examples;    // assembled, before filtering
  std::size_t skipped = 0;                 // accepted threads without a qualifying cluster
  std::vector<FilterVerdict> example_verdicts;
  std::vector<SummaryExample> surviving;
  std::array<std::vector<SummaryExample>, 3> splits;
  FilterReport report;
};

/// In-memory end-to-end pipeline over already-ingested threads.
PipelineResult run_pipeline(std::vector<QAThread> threads, const PipelineConfig& config,
                            Provider& provider);

// File-to-file stages shared by the CLI subcommands and run_to_directory.
// Inputs and outputs are line-delimited records; outputs are written to a
// temporary file and renamed into place.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

struct IngestCounts {
  std::size_t threads = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
};
IngestCounts stage_ingest(const std::filesystem::path& corpus, const std::filesystem::path& threads_out,
                          const std::filesystem::path& diagnostics_out, bool strict);

/// Returns the number of accepted threads.
std::size_t stage_filter_threads(const std::filesystem::path& threads_in, const std::filesystem::path& verdicts_out,
                                 const std::filesystem::path& accepted_out, const ThreadHeuristics& heuristics);

void stage_relevance(const std::filesystem::path& threads_in, const std::filesystem::path& scored_out,
                     Provider& provider, const PipelineConfig& config);

/// `dendrogram_out`, when non-empty, receives one merge record per line tagged with its thread id.
void stage_cluster(const std::filesystem::path& scored_in, const std::filesystem::path& clustered_out,
                   Provider& provider, const PipelineConfig& config,
                   const std::filesystem::path& dendrogram_out = {});

/// Returns the number of skipped threads.
std::size_t stage_assemble(const std::filesystem::path& clustered_in, const std::filesystem::path& examples_out);

FilterReport stage_filter_examples(const std::filesystem::path& examples_in, const std::filesystem::path& verdicts_out,
                                   const std::filesystem::path& accepted_out,
                                   const std::filesystem::path& report_prefix, Provider& provider,
                                   const PipelineConfig& config);

/// Writes train.jsonl, validation.jsonl and test.jsonl into out_dir after
/// re-validating every example with filter_example (throws kStage on failure).
std::array<std::size_t, 3> stage_split(const std::filesystem::path& examples_in, const std::filesystem::path& out_dir,
                                       Provider& provider, const PipelineConfig& config);

DatasetStats stage_stats(std::span<const std::filesystem::path> dataset_files,
                         const std::filesystem::path& report_prefix);

struct StageManifest {
  std::string stage;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string input_digest;
  std::string config_digest;
};

/// Digest of the concatenated bytes of the given files (FNV-1a 64, hex).
std::string digest_files(std::span<const std::filesystem::path> paths);

struct RunOptions {
  bool force = false;  // ignore manifests and recompute every stage
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::vector<std::string> executed;  // stage names actually recomputed
  std::vector<std::string> reused;    // stage names satisfied by a manifest
};

/// File-backed pipeline: writes stage outputs and manifests under `out_dir`
/// plus train.jsonl / validation.jsonl / test.jsonl and report files.
/// A stage is recomputed iff its input or config digest changed.
RunSummary run_to_directory(const PipelineConfig& config, const std::filesystem::path& corpus,
                            const std::filesystem::path& out_dir, const RunOptions& options = {});

struct ScoredCandidate {
  std::string id;
  double rouge_l_f1 = 0.0;
  double nli = 0.0;
  double semantic_area_raw = 0.0;
  double semantic_area = 0.0;  // normalized within the candidate file
};

struct ScoreSummary {
  std::vector<ScoredCandidate> rows;
  RewardBundle means;
  double mean_semantic_area_raw = 0.0;
};

/// Scores candidate summaries (id -> bullets) against dataset examples.
/// Throws kUnalignedCandidates for an empty candidate set or ids missing from the dataset.
ScoreSummary score_candidates(std::span<const SummaryExample> dataset,
                              std::span<const std::pair<std::string, std::vector<std::string>>> candidates,
                              Provider& provider);

}  // namespace mpsumm
