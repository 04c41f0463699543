#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdml/matrix.hpp"

namespace pdml {

/** How anchors pick their positive proxy during training. */
enum class Assignment {
  by_label,  // fixed label -> proxy map ("static")
  nearest,   // argmin over current proxy distances ("dynamic")
};

struct ProxySet {
  Matrix vectors;                   // count() x dim()
  Assignment mode = Assignment::by_label;
  std::vector<int> label_to_proxy;  // per label id; empty when mode == nearest
  double proxy_per_class_ratio = 1.0;

  std::size_t count() const { return vectors.rows; }
  std::size_t dim() const { return vectors.cols; }
};

struct FractionalAssignment {
  std::vector<int> label_to_proxy;
  std::size_t num_proxies = 0;
  bool clamped = false;  // requested ratio yielded < 2 proxies
};

/**
 * Distributes num_labels labels over max(2, ceil(num_labels * ratio)) proxies
 * by a seeded shuffle, as evenly as possible (per-proxy label counts differ by
 * at most one).
 */
FractionalAssignment fractional_preassign(std::size_t num_labels, double ratio,
                                          std::uint64_t seed);

/**
 * Proxy vectors with entries uniform in [-scale, scale]. With ratio == 1 the
 * label map is the identity; otherwise it comes from fractional_preassign.
 * In nearest mode the map is left empty.
 */
ProxySet init_proxies(std::size_t num_labels, double ratio, std::size_t dim,
                      double scale, std::uint64_t seed,
                      Assignment mode = Assignment::by_label);

/** Label's proxy under the fixed map. Unknown labels are usage errors. */
std::size_t assign_static(const ProxySet& proxies, int label);

/** Index of the proxy nearest to the embedding (squared Euclidean distance,
 *  ties broken by the lowest index). */
std::size_t assign_dynamic(std::span<const double> embedding, const ProxySet& proxies);

enum class DistanceKind { squared_euclidean, euclidean };

struct ApproxError {
  double epsilon = 0.0;          // worst nearest-proxy distance over the set
  std::size_t argmax_index = 0;  // point attaining it
};

/** max over points of the distance to their nearest proxy. */
ApproxError proxy_approx_error(const Matrix& embeddings, const ProxySet& proxies,
                               DistanceKind kind);

}  // namespace pdml
