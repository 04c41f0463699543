#include "pdml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pdml/errors.hpp"
#include "pdml/rng.hpp"

namespace pdml {

RetrievalResult recall_at_k(const Matrix& embeddings, const std::vector<int>& labels,
                            const std::vector<std::size_t>& ks) {
  const std::size_t n = embeddings.rows;
  if (labels.size() != n) throw UsageError("recall_at_k: labels/embeddings size mismatch");
  if (n < 2) throw ConfigError("recall_at_k: need at least 2 points");
  if (ks.empty()) throw ConfigError("recall_at_k: empty k list");
  for (std::size_t k : ks) {
    if (k == 0 || k >= n) {
      throw ConfigError("recall_at_k: k = " + std::to_string(k) +
                        " outside [1, " + std::to_string(n - 1) + "]");
    }
  }

  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t k : ks) hits[k] = 0;

  std::vector<std::pair<double, std::size_t>> order(n - 1);
  for (std::size_t q = 0; q < n; ++q) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      order[m++] = {squared_distance(embeddings.row(q), embeddings.row(j)), j};
    }
    // Ties broken by index: pair comparison orders by distance, then index.
    std::sort(order.begin(), order.end());

    std::size_t first_hit = n;  // rank (1-based) of the first same-class neighbor
    for (std::size_t r = 0; r < max_k; ++r) {
      if (labels[order[r].second] == labels[q]) {
        first_hit = r + 1;
        break;
      }
    }
    for (std::size_t k : ks) {
      if (first_hit <= k) ++hits[k];
    }
  }

  RetrievalResult result;
  result.num_queries = n;
  for (std::size_t k : ks) {
    result.recall_at[k] = static_cast<double>(hits[k]) / static_cast<double>(n);
  }
  return result;
}

namespace {

std::size_t nearest_centroid(const Matrix& points, std::size_t i, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = squared_distance(points.row(i), centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/** k-means++: D²-weighted seeding, deterministic per rng state. */
Matrix seed_centroids(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centroids(k, points.cols);
  std::vector<bool> chosen(n, false);

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t idx = first(rng);
  centroids.set_row(0, points.row(idx));
  chosen[idx] = true;

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= target) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = n - 1;  // guard against rounding at the upper end
    } else {
      // Every point duplicates a centroid; take the first unchosen index.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = 0;
    }
    centroids.set_row(c, points.row(pick));
    chosen[pick] = true;
  }
  return centroids;
}

}  // namespace

KmeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
  const std::size_t n = points.rows;
  if (k < 1) throw ConfigError("kmeans: K must be at least 1");
  if (k > n) throw ConfigError("kmeans: K = " + std::to_string(k) + " exceeds " +
                               std::to_string(n) + " points");

  Rng rng(seed);
  KmeansResult result;
  result.centroids = seed_centroids(points, k, rng);
  result.assignments.assign(n, -1);

  std::vector<int> previous(n, -2);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      result.assignments[i] = static_cast<int>(nearest_centroid(points, i, result.centroids));
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(
          points.row(i), result.centroids.row(static_cast<std::size_t>(result.assignments[i])));
    }
    result.inertia = inertia;
    result.inertia_trace.push_back(inertia);
    result.iterations = iter + 1;

    if (result.assignments == previous) break;
    previous = result.assignments;

    Matrix sums(k, points.cols);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      ++counts[c];
      add_scaled(sums.row(c), 1.0, points.row(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < points.cols; ++j) {
        result.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }

    // Re-seed each empty cluster from the point currently farthest from its
    // centroid; claimed points are excluded so two empty clusters differ.
    std::vector<bool> claimed(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (claimed[i]) continue;
        const double d = squared_distance(
            points.row(i), result.centroids.row(static_cast<std::size_t>(result.assignments[i])));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      result.centroids.set_row(c, points.row(far));
      claimed[far] = true;
    }
  }
  return result;
}

double nmi(const std::vector<int>& assignments, const std::vector<int>& labels) {
  if (assignments.size() != labels.size()) {
    throw UsageError("nmi: length mismatch (" + std::to_string(assignments.size()) +
                     " vs " + std::to_string(labels.size()) + ")");
  }
  if (assignments.empty()) throw UsageError("nmi: empty inputs");

  const auto n = static_cast<double>(assignments.size());
  std::map<int, std::size_t> count_a, count_b;
  std::map<std::pair<int, int>, std::size_t> joint;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    ++count_a[assignments[i]];
    ++count_b[labels[i]];
    ++joint[{assignments[i], labels[i]}];
  }

  auto entropy = [n](const std::map<int, std::size_t>& counts) {
    double h = 0.0;
    for (const auto& [id, c] : counts) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);  // p > 0 here; 0*log0 terms never appear
    }
    return h;
  };

  const double ha = entropy(count_a);
  const double hb = entropy(count_b);
  if (ha == 0.0 && hb == 0.0) return 1.0;

  double mi = 0.0;
  for (const auto& [ab, c] : joint) {
    const double p_ab = static_cast<double>(c) / n;
    const double p_a = static_cast<double>(count_a.at(ab.first)) / n;
    const double p_b = static_cast<double>(count_b.at(ab.second)) / n;
    mi += p_ab * std::log(p_ab / (p_a * p_b));
  }

  const double value = 2.0 * mi / (ha + hb);
  return std::clamp(value, 0.0, 1.0);
}

ClusteringResult cluster_quality(const Matrix& embeddings,
                                 const std::vector<int>& labels, std::size_t k,
                                 std::uint64_t seed, std::size_t max_iters) {
  const KmeansResult km = kmeans(embeddings, k, seed, max_iters);
  ClusteringResult result;
  result.assignments = km.assignments;
  result.kmeans_inertia = km.inertia;
  result.nmi = nmi(km.assignments, labels);
  return result;
}

}  // namespace pdml
