#include "mpsumm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mpsumm/error.hpp"
#include "mpsumm/hash.hpp"

namespace fs = std::filesystem;

namespace mpsumm {

namespace {

using json = nlohmann::ordered_json;

std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(d)) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, key + ": \"" + value + "\" is not a number");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() == '-') throw std::invalid_argument(value);
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, key + ": \"" + value + "\" is not a non-negative integer");
  }
}

SentenceId parse_sentence_id(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kMalformedRecord, "bad sentence id \"" + s + "\"");
  return {s.substr(0, colon), static_cast<std::size_t>(std::stoull(s.substr(colon + 1)))};
}

json parse_json_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
}

template <class Fn>
auto in_stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kStage) throw;
    throw Error(ErrorCode::kStage, name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kStage, name + ": " + e.what());
  }
}

std::vector<QAThread> parse_threads(const std::vector<std::string>& lines) {
  std::vector<QAThread> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(parse_thread(l));
  return out;
}

StatsInput stats_input(const std::string& line) {
  const json j = parse_json_line(line);
  StatsInput in;
  in.question = j.at("question").get<std::string>();
  in.source_sentences = j.at("source_sentences").get<std::vector<std::string>>();
  in.bullets = j.at("summary_bullets").get<std::vector<std::string>>();
  if (auto it = j.find("factoid"); it != j.end() && it->is_boolean()) in.factoid = it->get<bool>();
  return in;
}

}  // namespace

// ---- configuration ----

void PipelineConfig::validate() const {
  const double sum = split.train + split.validation + split.test;
  if (split.train < 0 || split.validation < 0 || split.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "split fractions must be non-negative and sum to 1");
  }
  if (!(relevance_threshold >= 0.0 && relevance_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "relevance_threshold must lie in [0, 1]");
  }
  if (!(cluster.max_distance > 0.0 && cluster.max_distance <= 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_distance must lie in (0, 2]");
  }
  if (!(filter.min_compression > 0.0) || filter.input_cap == 0 || filter.summary_cap == 0 ||
      filter.long_token == 0 || filter.math_symbols == 0 || filter.summary_links == 0 || filter.source_links == 0) {
    throw Error(ErrorCode::kInvalidConfig, "filter thresholds must be positive");
  }
  if (thread.min_answers == 0 || thread.max_longest_words == 0 || !(thread.sum_lower > 0) ||
      !(thread.sum_upper > thread.sum_lower) || !(thread.avg_lower > 0) || !(thread.avg_upper > thread.avg_lower)) {
    throw Error(ErrorCode::kInvalidConfig, "thread heuristics must be positive with lower < upper");
  }
  if (embed_dim < 16) throw Error(ErrorCode::kInvalidConfig, "embed_dim must be at least 16");
  if (workers == 0) throw Error(ErrorCode::kInvalidConfig, "workers must be at least 1");
}

std::string PipelineConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "provider=" << provider << "\nembed_dim=" << embed_dim << "\nrelevance_threshold=" << relevance_threshold
     << "\nmax_distance=" << cluster.max_distance << "\nmin_answers=" << thread.min_answers
     << "\nmax_longest_words=" << thread.max_longest_words << "\nsum_lower=" << thread.sum_lower
     << "\nsum_upper=" << thread.sum_upper << "\navg_lower=" << thread.avg_lower << "\navg_upper=" << thread.avg_upper
     << "\nmin_compression=" << filter.min_compression << "\ninput_cap=" << filter.input_cap
     << "\nsummary_cap=" << filter.summary_cap << "\nlong_token=" << filter.long_token
     << "\nmath_symbols=" << filter.math_symbols << "\nsummary_links=" << filter.summary_links
     << "\nsource_links=" << filter.source_links << "\nsplit_train=" << split.train
     << "\nsplit_validation=" << split.validation << "\nsplit_test=" << split.test << "\nseed=" << seed
     << "\nabbreviations=" << abbreviations << '\n';
  return os.str();
}

void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
  auto size = [&] { return static_cast<std::size_t>(parse_uint(key, value)); };
  auto real = [&] { return parse_double(key, value); };
  if (key == "provider") c.provider = value;
  else if (key == "embed_dim") c.embed_dim = size();
  else if (key == "relevance_threshold") c.relevance_threshold = real();
  else if (key == "max_distance") c.cluster.max_distance = real();
  else if (key == "min_answers") c.thread.min_answers = size();
  else if (key == "max_longest_words") c.thread.max_longest_words = size();
  else if (key == "sum_lower") c.thread.sum_lower = real();
  else if (key == "sum_upper") c.thread.sum_upper = real();
  else if (key == "avg_lower") c.thread.avg_lower = real();
  else if (key == "avg_upper") c.thread.avg_upper = real();
  else if (key == "min_compression") c.filter.min_compression = real();
  else if (key == "input_cap" || key == "token_cap") c.filter.input_cap = size();
  else if (key == "summary_cap") c.filter.summary_cap = size();
  else if (key == "long_token") c.filter.long_token = size();
  else if (key == "math_symbols") c.filter.math_symbols = size();
  else if (key == "summary_links") c.filter.summary_links = size();
  else if (key == "source_links") c.filter.source_links = size();
  else if (key == "split_train") c.split.train = real();
  else if (key == "split_validation") c.split.validation = real();
  else if (key == "split_test") c.split.test = real();
  else if (key == "seed") c.seed = parse_uint(key, value);
  else if (key == "workers") c.workers = size();
  else if (key == "abbreviations") c.abbreviations = value;
  else throw Error(ErrorCode::kInvalidConfig, "unknown setting \"" + key + "\"");
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim_copy(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, path.string() + ":" + std::to_string(n) + ": expected key = value");
    }
    apply_setting(base, trim_copy(t.substr(0, eq)), trim_copy(t.substr(eq + 1)));
  }
  return base;
}

// ---- per-thread steps ----

ScoredThread score_thread(const QAThread& thread, Provider& provider, double threshold,
                          const AbbreviationList& abbreviations) {
  ScoredThread out;
  out.id = thread.thread_id;
  out.question = thread.question();
  for (const auto& answer : thread.answers) {
    for (auto& unit : segment(answer.text, answer.answer_id, abbreviations)) {
      const double p = provider.relevance(out.question, unit.text).prob_relevant;
      out.sentences.push_back({std::move(unit), p, p >= threshold});
    }
  }
  return out;
}

ClusteredThread cluster_thread(ScoredThread scored, Provider& provider, const ClusterParams& params) {
  ClusteredThread out;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < scored.sentences.size(); ++i) {
    if (scored.sentences[i].relevant) {
      out.clustered.push_back(i);
      texts.push_back(scored.sentences[i].unit.text);
    }
  }
  if (!texts.empty()) {
    const auto vectors = provider.embed(texts);
    if (vectors.size() != texts.size()) throw Error(ErrorCode::kDimMismatch, "provider returned wrong vector count");
    out.clustering = cluster(vectors, params);
  }
  out.scored = std::move(scored);
  return out;
}

std::optional<SummaryExample> assemble_thread(const ClusteredThread& t) {
  std::vector<SentenceUnit> units;
  units.reserve(t.scored.sentences.size());
  for (const auto& s : t.scored.sentences) units.push_back(s.unit);
  return assemble(t.scored.id, t.scored.question, units, t.clustered, t.clustering.clusters);
}

// ---- records ----

std::string scored_record(const ScoredThread& t) {
  json j;
  j["id"] = t.id;
  j["question"] = t.question;
  json sentences = json::array();
  for (const auto& s : t.sentences) {
    json r;
    r["answer_id"] = s.unit.id.answer_id;
    r["index"] = s.unit.id.index;
    r["text"] = s.unit.text;
    r["relevance"] = s.relevance;
    r["relevant"] = s.relevant;
    sentences.push_back(std::move(r));
  }
  j["sentences"] = std::move(sentences);
  return j.dump();
}

namespace {

ScoredThread scored_from_json(const json& j) {
  ScoredThread t;
  t.id = j.at("id").get<std::string>();
  t.question = j.at("question").get<std::string>();
  for (const auto& r : j.at("sentences")) {
    ScoredSentence s;
    s.unit = make_sentence({r.at("answer_id").get<std::string>(), r.at("index").get<std::size_t>()},
                           r.at("text").get<std::string>());
    s.relevance = r.at("relevance").get<double>();
    s.relevant = r.at("relevant").get<bool>();
    t.sentences.push_back(std::move(s));
  }
  return t;
}

}  // namespace

ScoredThread parse_scored(std::string_view line) {
  try {
    return scored_from_json(parse_json_line(line));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
}

std::string clustered_record(const ClusteredThread& t) {
  json j = json::parse(scored_record(t.scored));
  j["clustered"] = t.clustered;
  json clusters = json::array();
  for (const auto& c : t.clustering.clusters) {
    json r;
    r["members"] = c.members;
    r["centroid"] = c.centroid_index;
    clusters.push_back(std::move(r));
  }
  j["clusters"] = std::move(clusters);
  json merges = json::array();
  for (const auto& m : t.clustering.merges) {
    json r;
    r["left"] = m.left;
    r["right"] = m.right;
    r["distance"] = m.distance;
    r["size"] = m.size;
    merges.push_back(std::move(r));
  }
  j["merges"] = std::move(merges);
  return j.dump();
}

ClusteredThread parse_clustered(std::string_view line) {
  try {
    const json j = parse_json_line(line);
    ClusteredThread t;
    t.scored = scored_from_json(j);
    t.clustered = j.at("clustered").get<std::vector<std::size_t>>();
    for (const auto& r : j.at("clusters")) {
      SentenceCluster c;
      c.members = r.at("members").get<std::vector<std::size_t>>();
      c.centroid_index = r.at("centroid").get<std::size_t>();
      if (c.members.empty() || c.centroid_index >= c.members.size()) {
        throw Error(ErrorCode::kMalformedRecord, "invalid cluster in thread " + t.scored.id);
      }
      for (std::size_t m : c.members) {
        if (m >= t.clustered.size()) throw Error(ErrorCode::kMalformedRecord, "cluster member out of range");
      }
      t.clustering.clusters.push_back(std::move(c));
    }
    for (const auto& r : j.at("merges")) {
      t.clustering.merges.push_back({r.at("left").get<std::size_t>(), r.at("right").get<std::size_t>(),
                                     r.at("distance").get<double>(), r.at("size").get<std::size_t>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
}

std::string example_record(const SummaryExample& e) {
  json j;
  j["id"] = e.id;
  j["question"] = e.question;
  json source = json::array();
  json source_ids = json::array();
  for (const auto& s : e.source_sentences) {
    source.push_back(s.text);
    source_ids.push_back(s.id.str());
  }
  j["source_sentences"] = std::move(source);
  j["summary_bullets"] = e.bullets;
  j["gold_spans"] = e.gold_spans;
  json prov;
  json centroids = json::array();
  for (const auto& c : e.centroids) centroids.push_back(c.str());
  json clusters = json::array();
  for (const auto& members : e.provenance) {
    json m = json::array();
    for (const auto& id : members) m.push_back(id.str());
    clusters.push_back(std::move(m));
  }
  prov["centroids"] = std::move(centroids);
  prov["clusters"] = std::move(clusters);
  prov["source_ids"] = std::move(source_ids);
  j["provenance"] = std::move(prov);
  return j.dump();
}

SummaryExample parse_example(std::string_view line) {
  try {
    const json j = parse_json_line(line);
    SummaryExample e;
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    const auto source = j.at("source_sentences").get<std::vector<std::string>>();
    std::vector<std::string> ids;
    const json* prov = j.contains("provenance") ? &j["provenance"] : nullptr;
    if (prov != nullptr && prov->contains("source_ids")) ids = (*prov)["source_ids"].get<std::vector<std::string>>();
    for (std::size_t i = 0; i < source.size(); ++i) {
      SentenceId id = i < ids.size() ? parse_sentence_id(ids[i]) : SentenceId{"source", i};
      e.source_sentences.push_back(make_sentence(std::move(id), source[i]));
    }
    e.bullets = j.at("summary_bullets").get<std::vector<std::string>>();
    if (j.contains("gold_spans")) e.gold_spans = j["gold_spans"].get<std::vector<std::size_t>>();
    if (prov != nullptr) {
      if (prov->contains("centroids")) {
        for (const auto& c : (*prov)["centroids"]) e.centroids.push_back(parse_sentence_id(c.get<std::string>()));
      }
      if (prov->contains("clusters")) {
        for (const auto& members : (*prov)["clusters"]) {
          std::vector<SentenceId> m;
          for (const auto& id : members) m.push_back(parse_sentence_id(id.get<std::string>()));
          e.provenance.push_back(std::move(m));
        }
      }
    }
    return e;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
}

std::string filter_verdict_record(const std::string& id, const FilterVerdict& v) {
  json j;
  j["id"] = id;
  j["accepted"] = v.accepted;
  json rules = json::array();
  for (auto r : v.violations) rules.push_back(std::string(to_string(r)));
  j["violations"] = std::move(rules);
  return j.dump();
}

// ---- splits ----

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> fr = {f.train, f.validation, f.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (remainder[i] > remainder[best] + 1e-12) best = i;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  while (assigned > n) {  // only reachable through rounding noise
    for (std::size_t i = 3; i-- > 0;) {
      if (counts[i] > 0) {
        --counts[i];
        --assigned;
        break;
      }
    }
  }
  return counts;
}

std::vector<int> assign_splits(std::span<const std::string> ids, const SplitFractions& fractions, std::uint64_t seed) {
  const auto counts = split_counts(ids.size(), fractions);
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> keys(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) keys[i] = fnv1a64(std::to_string(seed) + ":" + ids[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : ids[a] < ids[b];
  });
  std::vector<int> out(ids.size(), 2);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    out[order[rank]] = rank < counts[0] ? 0 : (rank < counts[0] + counts[1] ? 1 : 2);
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---- in-memory pipeline ----

namespace {

AbbreviationList abbreviations_for(const PipelineConfig& config) {
  return config.abbreviations.empty() ? AbbreviationList() : AbbreviationList::load(config.abbreviations);
}

std::vector<FilterVerdict> filter_all(std::span<const SummaryExample> examples, Provider& provider,
                                      const PipelineConfig& config) {
  std::vector<FilterVerdict> verdicts(examples.size());
  parallel_for(examples.size(), config.workers,
               [&](std::size_t i) { verdicts[i] = filter_example(examples[i], provider, config.filter); });
  return verdicts;
}

}  // namespace

PipelineResult run_pipeline(std::vector<QAThread> threads, const PipelineConfig& config, Provider& provider) {
  config.validate();
  const auto abbreviations = abbreviations_for(config);
  PipelineResult r;
  r.threads = std::move(threads);
  std::vector<const QAThread*> accepted;
  for (const auto& t : r.threads) {
    r.thread_verdicts.push_back(thread_filter(t, config.thread));
    if (r.thread_verdicts.back().accepted) accepted.push_back(&t);
  }
  r.scored.resize(accepted.size());
  parallel_for(accepted.size(), config.workers, [&](std::size_t i) {
    r.scored[i] = score_thread(*accepted[i], provider, config.relevance_threshold, abbreviations);
  });
  r.clustered.resize(accepted.size());
  parallel_for(accepted.size(), config.workers,
               [&](std::size_t i) { r.clustered[i] = cluster_thread(r.scored[i], provider, config.cluster); });
  for (const auto& c : r.clustered) {
    if (auto ex = assemble_thread(c)) {
      r.examples.push_back(std::move(*ex));
    } else {
      ++r.skipped;
    }
  }
  r.example_verdicts = filter_all(r.examples, provider, config);
  r.report = filter_report(r.example_verdicts);
  for (std::size_t i = 0; i < r.examples.size(); ++i) {
    if (r.example_verdicts[i].accepted) r.surviving.push_back(r.examples[i]);
  }
  std::vector<std::string> ids;
  for (const auto& e : r.surviving) ids.push_back(e.id);
  const auto splits = assign_splits(ids, config.split, config.seed);
  for (std::size_t i = 0; i < r.surviving.size(); ++i) r.splits[static_cast<std::size_t>(splits[i])].push_back(r.surviving[i]);
  return r;
}

// ---- file stages ----

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(std::move(line));
  }
  return out;
}

void write_lines(const fs::path& path, std::span<const std::string> lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

IngestCounts stage_ingest(const fs::path& corpus, const fs::path& threads_out, const fs::path& diagnostics_out,
                          bool strict) {
  std::ifstream in(corpus);
  if (!in) throw Error(ErrorCode::kIo, "cannot open corpus " + corpus.string());
  const auto result = ingest(in, {strict});
  std::vector<std::string> lines;
  for (const auto& t : result.threads) lines.push_back(serialize_thread(t));
  write_lines(threads_out, lines);
  IngestCounts counts;
  counts.threads = result.threads.size();
  std::vector<std::string> diag;
  for (const auto& d : result.diagnostics) {
    json j;
    j["line"] = d.line_number;
    j["code"] = d.code;
    j["message"] = d.message;
    diag.push_back(j.dump());
    if (d.code == "MALFORMED_RECORD") ++counts.malformed;
    else ++counts.duplicates;
  }
  if (!diagnostics_out.empty()) write_lines(diagnostics_out, diag);
  return counts;
}

std::size_t stage_filter_threads(const fs::path& threads_in, const fs::path& verdicts_out, const fs::path& accepted_out,
                                 const ThreadHeuristics& heuristics) {
  const auto lines = read_lines(threads_in);
  std::vector<std::string> verdicts;
  std::vector<std::string> accepted;
  for (const auto& l : lines) {
    const QAThread t = parse_thread(l);
    const auto v = thread_filter(t, heuristics);
    verdicts.push_back(verdict_record(t, v));
    if (v.accepted) accepted.push_back(l);
  }
  write_lines(verdicts_out, verdicts);
  write_lines(accepted_out, accepted);
  return accepted.size();
}

void stage_relevance(const fs::path& threads_in, const fs::path& scored_out, Provider& provider,
                     const PipelineConfig& config) {
  const auto threads = parse_threads(read_lines(threads_in));
  const auto abbreviations = abbreviations_for(config);
  std::vector<std::string> out(threads.size());
  parallel_for(threads.size(), config.workers, [&](std::size_t i) {
    out[i] = scored_record(score_thread(threads[i], provider, config.relevance_threshold, abbreviations));
  });
  write_lines(scored_out, out);
}

void stage_cluster(const fs::path& scored_in, const fs::path& clustered_out, Provider& provider,
                   const PipelineConfig& config, const fs::path& dendrogram_out) {
  const auto lines = read_lines(scored_in);
  std::vector<ClusteredThread> clustered(lines.size());
  parallel_for(lines.size(), config.workers, [&](std::size_t i) {
    clustered[i] = cluster_thread(parse_scored(lines[i]), provider, config.cluster);
  });
  std::vector<std::string> out;
  std::vector<std::string> dendro;
  for (const auto& c : clustered) {
    out.push_back(clustered_record(c));
    for (const auto& m : c.clustering.merges) {
      json j;
      j["thread"] = c.scored.id;
      j["left"] = m.left;
      j["right"] = m.right;
      j["distance"] = m.distance;
      j["size"] = m.size;
      dendro.push_back(j.dump());
    }
  }
  write_lines(clustered_out, out);
  if (!dendrogram_out.empty()) write_lines(dendrogram_out, dendro);
}

std::size_t stage_assemble(const fs::path& clustered_in, const fs::path& examples_out) {
  std::vector<std::string> out;
  std::size_t skipped = 0;
  for (const auto& l : read_lines(clustered_in)) {
    if (auto ex = assemble_thread(parse_clustered(l))) {
      out.push_back(example_record(*ex));
    } else {
      ++skipped;
    }
  }
  write_lines(examples_out, out);
  return skipped;
}

FilterReport stage_filter_examples(const fs::path& examples_in, const fs::path& verdicts_out,
                                   const fs::path& accepted_out, const fs::path& report_prefix, Provider& provider,
                                   const PipelineConfig& config) {
  const auto lines = read_lines(examples_in);
  std::vector<SummaryExample> examples;
  examples.reserve(lines.size());
  for (const auto& l : lines) examples.push_back(parse_example(l));
  const auto verdicts = filter_all(examples, provider, config);
  std::vector<std::string> verdict_lines;
  std::vector<std::string> accepted;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    verdict_lines.push_back(filter_verdict_record(examples[i].id, verdicts[i]));
    if (verdicts[i].accepted) accepted.push_back(lines[i]);
  }
  write_lines(verdicts_out, verdict_lines);
  write_lines(accepted_out, accepted);
  const auto report = filter_report(verdicts);
  if (!report_prefix.empty()) {
    const std::string rec = report.record();
    const std::string table = report.table();
    write_lines(report_prefix.string() + ".json", std::span<const std::string>(&rec, 1));
    write_lines(report_prefix.string() + ".txt", std::span<const std::string>(&table, 1));
  }
  return report;
}

std::array<std::size_t, 3> stage_split(const fs::path& examples_in, const fs::path& out_dir, Provider& provider,
                                       const PipelineConfig& config) {
  const auto lines = read_lines(examples_in);
  std::vector<SummaryExample> examples;
  std::vector<std::string> ids;
  for (const auto& l : lines) {
    examples.push_back(parse_example(l));
    ids.push_back(examples.back().id);
  }
  const auto verdicts = filter_all(examples, provider, config);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!verdicts[i].accepted) {
      throw Error(ErrorCode::kStage, "split: example \"" + examples[i].id + "\" fails re-validation");
    }
  }
  const auto assignment = assign_splits(ids, config.split, config.seed);
  std::array<std::vector<std::string>, 3> parts;
  for (std::size_t i = 0; i < lines.size(); ++i) parts[static_cast<std::size_t>(assignment[i])].push_back(lines[i]);
  write_lines(out_dir / "train.jsonl", parts[0]);
  write_lines(out_dir / "validation.jsonl", parts[1]);
  write_lines(out_dir / "test.jsonl", parts[2]);
  return {parts[0].size(), parts[1].size(), parts[2].size()};
}

DatasetStats stage_stats(std::span<const fs::path> dataset_files, const fs::path& report_prefix) {
  std::vector<StatsInput> inputs;
  for (const auto& f : dataset_files) {
    for (const auto& l : read_lines(f)) inputs.push_back(stats_input(l));
  }
  const auto stats = dataset_stats(inputs);
  if (!report_prefix.empty()) {
    const std::string rec = stats.record();
    const std::string table = stats.table();
    write_lines(report_prefix.string() + ".json", std::span<const std::string>(&rec, 1));
    write_lines(report_prefix.string() + ".txt", std::span<const std::string>(&table, 1));
  }
  return stats;
}

// ---- manifests ----

std::string digest_files(std::span<const fs::path> paths) {
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    h = fnv1a64(ss.str(), h);
    h = fnv1a64("\x1e", h);
  }
  return hex64(h);
}

namespace {

std::optional<StageManifest> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.input_digest = j.at("input_digest").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    return m;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void write_manifest(const fs::path& path, const StageManifest& m) {
  json j;
  j["stage"] = m.stage;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["input_digest"] = m.input_digest;
  j["config_digest"] = m.config_digest;
  const std::string line = j.dump();
  write_lines(path, std::span<const std::string>(&line, 1));
}

// Provider identity that does not require constructing the provider.
std::string provider_identity(const PipelineConfig& config) {
  if (config.provider == "lexical") return "lexical:" + std::to_string(config.embed_dim);
  if (config.provider.rfind("file:", 0) == 0) {
    const fs::path p = config.provider.substr(5);
    return config.provider + "@" + digest_files(std::span<const fs::path>(&p, 1));
  }
  return config.provider;
}

}  // namespace

RunSummary run_to_directory(const PipelineConfig& config, const fs::path& corpus, const fs::path& out_dir,
                            const RunOptions& options) {
  config.validate();
  fs::create_directories(out_dir / "manifests");
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::unique_ptr<Provider> provider;
  auto get_provider = [&]() -> Provider& {
    if (!provider) provider = make_provider(config.provider, config.embed_dim);
    return *provider;
  };
  const std::string provider_id = in_stage("provider", [&] { return provider_identity(config); });
  std::string abbreviation_id = "builtin";
  if (!config.abbreviations.empty()) {
    const fs::path p = config.abbreviations;
    abbreviation_id = digest_files(std::span<const fs::path>(&p, 1));
  }
  std::ostringstream th;
  th.precision(17);
  th << config.thread.min_answers << ',' << config.thread.max_longest_words << ',' << config.thread.sum_lower << ','
     << config.thread.sum_upper << ',' << config.thread.avg_lower << ',' << config.thread.avg_upper;
  std::ostringstream fl;
  fl.precision(17);
  fl << config.filter.min_compression << ',' << config.filter.input_cap << ',' << config.filter.summary_cap << ','
     << config.filter.long_token << ',' << config.filter.math_symbols << ',' << config.filter.summary_links << ','
     << config.filter.source_links;
  std::ostringstream sp;
  sp.precision(17);
  sp << config.split.train << ',' << config.split.validation << ',' << config.split.test << ',' << config.seed;
  std::ostringstream rel;
  rel.precision(17);
  rel << provider_id << ',' << config.relevance_threshold << ',' << abbreviation_id;
  std::ostringstream clu;
  clu.precision(17);
  clu << provider_id << ',' << config.cluster.max_distance;

  auto display_path = [&](const fs::path& p) {
    const fs::path rel = p.lexically_relative(out_dir);
    return !rel.empty() && *rel.begin() != ".." ? rel.string() : p.string();
  };

  RunSummary summary;
  auto stage = [&](const std::string& name, std::vector<fs::path> inputs, std::vector<fs::path> outputs,
                   const std::string& config_text, const std::function<void()>& body) {
    in_stage(name, [&] {
      const fs::path manifest_path = out_dir / "manifests" / (name + ".json");
      StageManifest m;
      m.stage = name;
      for (const auto& p : inputs) m.inputs.push_back(display_path(p));
      for (const auto& p : outputs) m.outputs.push_back(display_path(p));
      m.input_digest = digest_files(inputs);
      m.config_digest = hex64(fnv1a64(name + "\n" + config_text));
      const auto previous = read_manifest(manifest_path);
      const bool outputs_exist =
          std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
      if (!options.force && previous && outputs_exist && previous->input_digest == m.input_digest &&
          previous->config_digest == m.config_digest) {
        log("stage " + name + ": up to date");
        summary.reused.push_back(name);
        return 0;
      }
      log("stage " + name + ": running");
      body();
      write_manifest(manifest_path, m);
      summary.executed.push_back(name);
      return 0;
    });
  };

  const fs::path threads = out_dir / "threads.jsonl";
  const fs::path ingest_diag = out_dir / "ingest_diagnostics.jsonl";
  const fs::path thread_verdicts = out_dir / "thread_verdicts.jsonl";
  const fs::path accepted_threads = out_dir / "threads.accepted.jsonl";
  const fs::path scored = out_dir / "scored.jsonl";
  const fs::path clustered = out_dir / "clustered.jsonl";
  const fs::path examples = out_dir / "examples.jsonl";
  const fs::path example_verdicts = out_dir / "example_verdicts.jsonl";
  const fs::path accepted_examples = out_dir / "examples.accepted.jsonl";
  const fs::path filter_prefix = out_dir / "filter_report";
  const fs::path stats_prefix = out_dir / "stats";

  stage("ingest", {corpus}, {threads, ingest_diag}, "", [&] { stage_ingest(corpus, threads, ingest_diag, false); });
  stage("filter-threads", {threads}, {thread_verdicts, accepted_threads}, th.str(),
        [&] { stage_filter_threads(threads, thread_verdicts, accepted_threads, config.thread); });
  stage("relevance", {accepted_threads}, {scored}, rel.str(),
        [&] { stage_relevance(accepted_threads, scored, get_provider(), config); });
  stage("cluster", {scored}, {clustered}, clu.str(),
        [&] { stage_cluster(scored, clustered, get_provider(), config); });
  stage("assemble", {clustered}, {examples}, "bm25:1.2,0.75", [&] { stage_assemble(clustered, examples); });
  stage("filter-examples", {examples}, {example_verdicts, accepted_examples, filter_prefix.string() + ".json"},
        provider_id + "," + fl.str(), [&] {
          stage_filter_examples(examples, example_verdicts, accepted_examples, filter_prefix, get_provider(), config);
        });
  stage("split", {accepted_examples},
        {out_dir / "train.jsonl", out_dir / "validation.jsonl", out_dir / "test.jsonl"},
        provider_id + "," + fl.str() + "," + sp.str(),
        [&] { stage_split(accepted_examples, out_dir, get_provider(), config); });
  const std::vector<fs::path> dataset = {out_dir / "train.jsonl", out_dir / "validation.jsonl", out_dir / "test.jsonl"};
  stage("stats", dataset, {stats_prefix.string() + ".json"}, "", [&] { stage_stats(dataset, stats_prefix); });
  return summary;
}

// ---- scoring ----

ScoreSummary score_candidates(std::span<const SummaryExample> dataset,
                              std::span<const std::pair<std::string, std::vector<std::string>>> candidates,
                              Provider& provider) {
  if (candidates.empty()) throw Error(ErrorCode::kUnalignedCandidates, "no candidate summaries");
  std::unordered_map<std::string, const SummaryExample*> by_id;
  for (const auto& e : dataset) by_id[e.id] = &e;
  ScoreSummary out;
  std::vector<double> raw;
  for (const auto& [id, bullets] : candidates) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::kUnalignedCandidates, "candidate \"" + id + "\" has no example");
    const SummaryExample& ex = *it->second;
    ScoredCandidate row;
    row.id = id;
    std::string cand;
    std::string ref;
    for (const auto& b : bullets) cand += (cand.empty() ? "" : " ") + b;
    for (const auto& b : ex.bullets) ref += (ref.empty() ? "" : " ") + b;
    row.rouge_l_f1 = rouge_l(cand, ref).f1;
    std::vector<std::string> source;
    for (const auto& s : ex.source_sentences) source.push_back(s.text);
    if (!bullets.empty() && !source.empty()) row.nli = nli_score(bullets, source, provider);
    if (!bullets.empty()) row.semantic_area_raw = semantic_area(bullets, provider);
    raw.push_back(row.semantic_area_raw);
    out.rows.push_back(std::move(row));
  }
  const auto norm = normalize_area(raw);
  const double n = static_cast<double>(out.rows.size());
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    out.rows[i].semantic_area = norm[i];
    out.means.rouge_l += out.rows[i].rouge_l_f1 / n;
    out.means.nli += out.rows[i].nli / n;
    out.means.semantic_area += norm[i] / n;
    out.mean_semantic_area_raw += out.rows[i].semantic_area_raw / n;
  }
  return out;
}

}  // namespace mpsumm
