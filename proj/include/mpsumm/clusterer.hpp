#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpsumm/textproc.hpp"

namespace mpsumm {

struct ClusterParams {
  // Only average linkage over cosine distance is implemented.
  double max_distance = 0.65;
};

/// 1 - cos(a, b). Vectors whose norm is already 1 (within 1e-9) are used as-is;
/// others are normalized first. A zero vector is at distance 1 from everything.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Symmetric n x n matrix of cosine distances, row-major, zero diagonal.
std::vector<double> distance_matrix(std::span<const EmbeddingVector> embeddings);

struct Merge {
  std::size_t left = 0;   // node ids, left < right: leaves 0..n-1, merge k creates node n+k
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;   // members in the merged node
};

struct SentenceCluster {
  std::vector<std::size_t> members;  // input positions, ascending
  std::size_t centroid_index = 0;    // index into members
};

struct Clustering {
  std::vector<SentenceCluster> clusters;  // ordered by smallest member
  std::vector<Merge> merges;              // in execution order
};

/// Bottom-up average-linkage agglomeration. Each step merges the pair of
/// clusters with the smallest mean pairwise cosine distance; equal distances
/// go to the pair whose (smaller min-member, larger min-member) is
/// lexicographically lowest. Stops once the smallest distance exceeds
/// max_distance. Centroids are filled by pick_centroid.
Clustering cluster(std::span<const EmbeddingVector> embeddings, const ClusterParams& params = {});

/// Medoid: the member with the smallest mean cosine distance to the other
/// members; ties go to the lowest member position. `distances` is the full
/// matrix from distance_matrix over all n inputs.
std::size_t pick_centroid(std::span<const std::size_t> members, std::span<const double> distances,
                          std::size_t n);
std::size_t pick_centroid(std::span<const EmbeddingVector> member_embeddings);

/// One line per merge: {"left":L,"right":R,"distance":D,"size":S}.
std::string dendrogram_lines(std::span<const Merge> merges);

struct SummaryExample {
  std::string id;
  std::string question;
  std::vector<SentenceUnit> source_sentences;  // centroids removed
  std::vector<std::string> bullets;
  std::vector<std::vector<SentenceId>> provenance;  // per bullet: cluster members
  std::vector<SentenceId> centroids;                // per bullet
  std::vector<std::size_t> gold_spans;              // per bullet: index into source_sentences
};

/// Builds the summary example for one thread. `sentences` holds every answer
/// sentence in thread order; `clustered` maps each clustering input position to
/// its index in `sentences`. A cluster yields a bullet when it has at least two
/// members and at least one member whose text differs from the centroid text.
/// Every source sentence whose text equals a bullet verbatim is removed.
/// Bullets follow the position of each cluster's earliest member. Returns
/// nullopt (SKIPPED) when no cluster qualifies.
std::optional<SummaryExample> assemble(std::string id, std::string question,
                                       std::span<const SentenceUnit> sentences,
                                       std::span<const std::size_t> clustered,
                                       std::span<const SentenceCluster> clusters,
                                       const Bm25Params& bm25 = {});

}  // namespace mpsumm
