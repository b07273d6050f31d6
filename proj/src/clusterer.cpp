#include "mpsumm/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mpsumm/error.hpp"

namespace mpsumm {

namespace {

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string_view trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\v\f");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(b, e - b + 1);
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimMismatch, "cosine_distance on vectors of different width");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  double na = norm_of(a);
  double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  if (std::abs(na - 1.0) <= 1e-9) na = 1.0;
  if (std::abs(nb - 1.0) <= 1e-9) nb = 1.0;
  return 1.0 - dot / (na * nb);
}

std::vector<double> distance_matrix(std::span<const EmbeddingVector> embeddings) {
  const std::size_t n = embeddings.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = cosine_distance(embeddings[i], embeddings[j]);
      d[i * n + j] = v;
      d[j * n + i] = v;
    }
  }
  return d;
}

std::size_t pick_centroid(std::span<const std::size_t> members, std::span<const double> distances, std::size_t n) {
  if (members.size() <= 1) return 0;
  std::size_t best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (i != j) sum += distances[members[i] * n + members[j]];
    }
    const double mean = sum / static_cast<double>(members.size() - 1);
    if (mean < best_mean || (mean == best_mean && members[i] < members[best])) {
      best_mean = mean;
      best = i;
    }
  }
  return best;
}

std::size_t pick_centroid(std::span<const EmbeddingVector> member_embeddings) {
  if (member_embeddings.empty()) throw Error(ErrorCode::kEmptyInput, "pick_centroid of an empty cluster");
  const auto d = distance_matrix(member_embeddings);
  std::vector<std::size_t> members(member_embeddings.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  return pick_centroid(members, d, members.size());
}

Clustering cluster(std::span<const EmbeddingVector> embeddings, const ClusterParams& params) {
  const std::size_t n = embeddings.size();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "cluster needs at least one sentence");
  if (!(params.max_distance > 0.0 && params.max_distance <= 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_distance must lie in (0, 2]");
  }
  for (const auto& e : embeddings) {
    if (e.size() != embeddings.front().size()) throw Error(ErrorCode::kDimMismatch, "embeddings differ in width");
  }
  const auto d = distance_matrix(embeddings);

  struct Node {
    std::vector<std::size_t> members;
    std::size_t id;
    bool active = true;
  };
  std::vector<Node> nodes;
  nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({{i}, i, true});
  // Sum of pairwise distances between the members of two slots.
  std::vector<double> sums = d;

  Clustering out;
  std::size_t next_id = n;
  while (true) {
    std::size_t best_a = n;
    std::size_t best_b = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (!nodes[a].active) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!nodes[b].active) continue;
        const double avg = sums[a * n + b] /
                           static_cast<double>(nodes[a].members.size() * nodes[b].members.size());
        // Slots are indexed by their smallest member, so slot order is the tie-break order.
        if (avg < best) {
          best = avg;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a == n || best > params.max_distance) break;

    Node& a = nodes[best_a];
    Node& b = nodes[best_b];
    out.merges.push_back({std::min(a.id, b.id), std::max(a.id, b.id), best, a.members.size() + b.members.size()});
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    std::sort(a.members.begin(), a.members.end());
    a.id = next_id++;
    b.active = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (!nodes[c].active || c == best_a) continue;
      const double merged = sums[best_a * n + c] + sums[best_b * n + c];
      sums[best_a * n + c] = merged;
      sums[c * n + best_a] = merged;
    }
  }

  for (auto& node : nodes) {
    if (!node.active) continue;
    SentenceCluster c;
    c.members = std::move(node.members);
    c.centroid_index = pick_centroid(c.members, d, n);
    out.clusters.push_back(std::move(c));
  }
  return out;
}

std::string dendrogram_lines(std::span<const Merge> merges) {
  std::ostringstream os;
  for (const auto& m : merges) {
    nlohmann::ordered_json j;
    j["left"] = m.left;
    j["right"] = m.right;
    j["distance"] = m.distance;
    j["size"] = m.size;
    os << j.dump() << '\n';
  }
  return os.str();
}

std::optional<SummaryExample> assemble(std::string id, std::string question,
                                       std::span<const SentenceUnit> sentences,
                                       std::span<const std::size_t> clustered,
                                       std::span<const SentenceCluster> clusters, const Bm25Params& bm25) {
  struct Candidate {
    std::size_t earliest;
    std::size_t centroid;                // index into sentences
    std::vector<std::size_t> positions;  // member indices into sentences
    std::string text;
  };
  std::vector<Candidate> candidates;
  for (const auto& c : clusters) {
    if (c.members.size() < 2) continue;
    Candidate cand;
    for (std::size_t m : c.members) cand.positions.push_back(clustered[m]);
    std::sort(cand.positions.begin(), cand.positions.end());
    cand.earliest = cand.positions.front();
    cand.centroid = clustered[c.members[c.centroid_index]];
    cand.text = std::string(trimmed(sentences[cand.centroid].text));
    const bool has_distinct = std::any_of(cand.positions.begin(), cand.positions.end(), [&](std::size_t p) {
      return trimmed(sentences[p].text) != cand.text;
    });
    if (has_distinct) candidates.push_back(std::move(cand));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.earliest < b.earliest; });

  // Drop bullets until every remaining bullet keeps at least one of its
  // cluster's sentences in the source. Dropping only shrinks the removal set.
  std::vector<bool> removed(sentences.size(), false);
  while (true) {
    std::fill(removed.begin(), removed.end(), false);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const auto t = trimmed(sentences[i].text);
      removed[i] = std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) { return c.text == t; });
    }
    const auto orphan = std::find_if(candidates.begin(), candidates.end(), [&](const Candidate& c) {
      return std::none_of(c.positions.begin(), c.positions.end(), [&](std::size_t p) { return !removed[p]; });
    });
    if (orphan == candidates.end()) break;
    candidates.erase(orphan);
  }
  if (candidates.empty()) return std::nullopt;

  SummaryExample ex;
  ex.id = std::move(id);
  ex.question = std::move(question);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!removed[i]) ex.source_sentences.push_back(sentences[i]);
  }
  for (const auto& c : candidates) {
    ex.bullets.push_back(c.text);
    ex.centroids.push_back(sentences[c.centroid].id);
    std::vector<SentenceId> members;
    for (std::size_t p : c.positions) members.push_back(sentences[p].id);
    ex.provenance.push_back(std::move(members));
    const auto scores = bm25_scores(make_sentence({}, c.text), ex.source_sentences, bm25);
    ex.gold_spans.push_back(argmax_lowest(scores));
  }
  return ex;
}

}  // namespace mpsumm
