// mpsumm: build multi-perspective summarization datasets from CQA threads.
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpsumm/error.hpp"
#include "mpsumm/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::string> provider;
  std::optional<std::size_t> embed_dim;
  std::optional<double> relevance_threshold;
  std::optional<double> max_distance;
  std::optional<std::size_t> token_cap;
  std::optional<std::size_t> summary_cap;
  std::optional<double> min_compression;
  std::optional<std::size_t> long_token;
  std::optional<std::size_t> math_symbols;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> abbreviations;
  std::vector<double> split;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", settings, "override one setting, KEY=VALUE (repeatable)");
    app->add_option("--provider", provider, "lexical | file:PATH | sidecar:CMD | sidecar:tcp://HOST:PORT");
    app->add_option("--embed-dim", embed_dim, "lexical embedding dimension");
    app->add_option("--relevance-threshold", relevance_threshold);
    app->add_option("--max-distance", max_distance, "clustering cosine distance cutoff");
    app->add_option("--token-cap", token_cap, "source token cap");
    app->add_option("--summary-cap", summary_cap);
    app->add_option("--min-compression", min_compression);
    app->add_option("--long-token", long_token);
    app->add_option("--math-symbols", math_symbols);
    app->add_option("--seed", seed);
    app->add_option("--workers", workers);
    app->add_option("--abbreviations", abbreviations, "abbreviation list, one per line");
    app->add_option("--split", split, "train,validation,test fractions")->delimiter(',')->expected(3);
  }

  mpsumm::PipelineConfig resolve() const {
    mpsumm::PipelineConfig c;
    if (!config_file.empty()) c = mpsumm::load_config(config_file, c);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw mpsumm::Error(mpsumm::ErrorCode::kInvalidConfig, "--set expects KEY=VALUE, got \"" + s + "\"");
      }
      mpsumm::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (provider) c.provider = *provider;
    if (embed_dim) c.embed_dim = *embed_dim;
    if (relevance_threshold) c.relevance_threshold = *relevance_threshold;
    if (max_distance) c.cluster.max_distance = *max_distance;
    if (token_cap) c.filter.input_cap = *token_cap;
    if (summary_cap) c.filter.summary_cap = *summary_cap;
    if (min_compression) c.filter.min_compression = *min_compression;
    if (long_token) c.filter.long_token = *long_token;
    if (math_symbols) c.filter.math_symbols = *math_symbols;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (abbreviations) c.abbreviations = *abbreviations;
    if (split.size() == 3) c.split = {split[0], split[1], split[2]};
    c.validate();
    return c;
  }
};

std::vector<std::string> candidate_bullets(const json& j) {
  if (auto it = j.find("summary_bullets"); it != j.end()) return it->get<std::vector<std::string>>();
  if (auto it = j.find("summary"); it != j.end()) return mpsumm::split_sentences(it->get<std::string>());
  throw mpsumm::Error(mpsumm::ErrorCode::kMalformedRecord, "candidate without summary_bullets or summary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build multi-perspective bullet summarization datasets from CQA threads"};
  app.require_subcommand(1);
  ConfigFlags flags;
  std::string in;
  std::string out;
  std::string verdicts;
  std::string report;
  std::string extra;
  std::vector<std::string> inputs;
  bool strict = false;
  bool force = false;

  auto* ingest = app.add_subcommand("ingest", "validate and normalize a thread corpus");
  ingest->add_option("--corpus", in, "input corpus (one thread per line)")->required();
  ingest->add_option("--out", out)->required();
  ingest->add_option("--diagnostics", report, "where to write skipped-record diagnostics");
  ingest->add_flag("--strict", strict, "fail on the first malformed or duplicate record");

  auto* filter_threads = app.add_subcommand("filter-threads", "apply the thread heuristics");
  filter_threads->add_option("--in", in)->required();
  filter_threads->add_option("--out", out, "accepted threads")->required();
  filter_threads->add_option("--verdicts", verdicts)->required();
  flags.attach(filter_threads);

  auto* relevance = app.add_subcommand("relevance", "segment answers and score sentence relevance");
  relevance->add_option("--in", in)->required();
  relevance->add_option("--out", out)->required();
  flags.attach(relevance);

  auto* cluster = app.add_subcommand("cluster", "cluster relevant sentences per thread");
  cluster->add_option("--in", in)->required();
  cluster->add_option("--out", out)->required();
  cluster->add_option("--dendrogram", extra, "write merge records here");
  flags.attach(cluster);

  auto* assemble = app.add_subcommand("assemble", "turn cluster centroids into summary examples");
  assemble->add_option("--in", in)->required();
  assemble->add_option("--out", out)->required();

  auto* filter_examples = app.add_subcommand("filter-examples", "apply the example filters");
  filter_examples->add_option("--in", in)->required();
  filter_examples->add_option("--out", out, "accepted examples")->required();
  filter_examples->add_option("--verdicts", verdicts)->required();
  filter_examples->add_option("--report", report, "report path prefix (.json and .txt)");
  flags.attach(filter_examples);

  auto* split = app.add_subcommand("split", "assign examples to train/validation/test");
  split->add_option("--in", in)->required();
  split->add_option("--out-dir", out)->required();
  flags.attach(split);

  auto* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("--in", inputs, "dataset files")->required()->check(CLI::ExistingFile);
  stats->add_option("--report", report, "report path prefix (.json and .txt)");

  auto* score = app.add_subcommand("score", "score candidate summaries against a dataset");
  score->add_option("--dataset", inputs, "dataset files")->required()->check(CLI::ExistingFile);
  score->add_option("--candidates", in, "one {\"id\", \"summary_bullets\" | \"summary\"} per line")->required();
  score->add_option("--out", out, "per-example records (default stdout)");
  flags.attach(score);

  auto* run = app.add_subcommand("run", "run every stage into a directory");
  run->add_option("--corpus", in)->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out)->required();
  run->add_flag("--force", force, "recompute stages even when manifests match");
  flags.attach(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      const auto counts = mpsumm::stage_ingest(in, out, report, strict);
      std::cerr << "threads " << counts.threads << ", malformed " << counts.malformed << ", duplicates "
                << counts.duplicates << '\n';
      return 0;
    }
    if (assemble->parsed()) {
      const auto skipped = mpsumm::stage_assemble(in, out);
      std::cerr << "skipped " << skipped << " threads without a qualifying cluster\n";
      return 0;
    }
    if (stats->parsed()) {
      std::vector<fs::path> files(inputs.begin(), inputs.end());
      std::cout << mpsumm::stage_stats(files, report).table();
      return 0;
    }

    const auto config = flags.resolve();
    if (filter_threads->parsed()) {
      const auto accepted = mpsumm::stage_filter_threads(in, verdicts, out, config.thread);
      std::cerr << "accepted " << accepted << " threads\n";
      return 0;
    }
    if (run->parsed()) {
      mpsumm::RunOptions options;
      options.force = force;
      options.log = [](const std::string& line) { std::cerr << line << '\n'; };
      mpsumm::run_to_directory(config, in, out, options);
      return 0;
    }

    auto provider = mpsumm::make_provider(config.provider, config.embed_dim);
    if (relevance->parsed()) {
      mpsumm::stage_relevance(in, out, *provider, config);
    } else if (cluster->parsed()) {
      mpsumm::stage_cluster(in, out, *provider, config, extra);
    } else if (filter_examples->parsed()) {
      std::cout << mpsumm::stage_filter_examples(in, verdicts, out, report, *provider, config).table();
    } else if (split->parsed()) {
      const auto counts = mpsumm::stage_split(in, out, *provider, config);
      std::cerr << "train " << counts[0] << ", validation " << counts[1] << ", test " << counts[2] << '\n';
    } else if (score->parsed()) {
      std::vector<mpsumm::SummaryExample> dataset;
      for (const auto& f : inputs) {
        for (const auto& l : mpsumm::read_lines(f)) dataset.push_back(mpsumm::parse_example(l));
      }
      std::vector<std::pair<std::string, std::vector<std::string>>> candidates;
      for (const auto& l : mpsumm::read_lines(in)) {
        json j;
        try {
          j = json::parse(l);
        } catch (const json::exception& e) {
          throw mpsumm::Error(mpsumm::ErrorCode::kMalformedRecord, e.what());
        }
        candidates.emplace_back(j.at("id").get<std::string>(), candidate_bullets(j));
      }
      const auto result = mpsumm::score_candidates(dataset, candidates, *provider);
      std::ofstream file;
      if (!out.empty()) file.open(out);
      std::ostream& os = out.empty() ? std::cout : file;
      for (const auto& r : result.rows) {
        json j;
        j["id"] = r.id;
        j["rouge_l"] = r.rouge_l_f1;
        j["nli"] = r.nli;
        j["semantic_area_raw"] = r.semantic_area_raw;
        j["semantic_area"] = r.semantic_area;
        os << j.dump() << '\n';
      }
      json means;
      means["count"] = result.rows.size();
      means["rouge_l"] = result.means.rouge_l;
      means["nli"] = result.means.nli;
      means["semantic_area_raw"] = result.mean_semantic_area_raw;
      means["semantic_area"] = result.means.semantic_area;
      std::cerr << means.dump() << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mpsumm: " << e.what() << '\n';
    return 1;
  }
}
