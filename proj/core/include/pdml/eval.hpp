#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "pdml/matrix.hpp"

namespace pdml {

struct RetrievalResult {
  std::map<std::size_t, double> recall_at;
  std::size_t num_queries = 0;
};

/**
 * Recall@k with each query excluded from its own gallery: the k nearest
 * other points by squared distance, ties broken by index. Requires
 * max(ks) < number of points.
 */
RetrievalResult recall_at_k(const Matrix& embeddings, const std::vector<int>& labels,
                            const std::vector<std::size_t>& ks);

struct KmeansResult {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

/**
 * Lloyd's iterations from k-means++ seeding, deterministic per seed.
 * Assignment ties go to the lowest centroid index; a cluster left empty is
 * re-seeded from the point farthest from its current centroid. Stops when
 * assignments are stable or after max_iters.
 */
KmeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

/**
 * Normalized mutual information 2*I(A,B) / (H(A)+H(B)) with natural-log
 * entropies of the empirical distributions; 0*log0 := 0. Returns 1 when both
 * entropies are zero (single cluster against single class).
 */
double nmi(const std::vector<int>& assignments, const std::vector<int>& labels);

struct ClusteringResult {
  std::vector<int> assignments;
  double nmi = 0.0;
  double kmeans_inertia = 0.0;
};

/** K-means with K = number of ground-truth classes, scored by NMI. */
ClusteringResult cluster_quality(const Matrix& embeddings,
                                 const std::vector<int>& labels, std::size_t k,
                                 std::uint64_t seed, std::size_t max_iters = 100);

}  // namespace pdml
