#pragma once

#include <span>
#include <vector>

#include "pdml/matrix.hpp"

namespace pdml {

/**
 * Loss value with gradients w.r.t. every input vector. All losses below use
 * squared Euclidean distance. The softmax denominator in the NCA family runs
 * over the negatives only, so values can be negative.
 */
struct LossOutput {
  double value = 0.0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
};

/** Heaviside ranking loss: 1 when d_xy > d_xz, else 0 (H(0) := 0, so equality
 *  counts as correctly ordered). Evaluation-only; it has no useful gradient. */
double ranking_loss(double d_xy, double d_xz);

/** NCA loss of an anchor against one positive and a set of negatives (rows). */
LossOutput nca_loss(std::span<const double> anchor, std::span<const double> positive,
                    const Matrix& negatives);

/** NCA loss where positive and negatives are proxies. Identical arithmetic to
 *  nca_loss; the gradients returned for positive/negatives belong to proxy
 *  parameters rather than to other data points. */
LossOutput proxy_nca_loss(std::span<const double> anchor,
                          std::span<const double> positive_proxy,
                          const Matrix& negative_proxies);

/** max(0, d(x,y) + margin - d(x,z)), subgradient 0 at the hinge point. */
LossOutput triplet_hinge_loss(std::span<const double> anchor,
                              std::span<const double> positive,
                              std::span<const double> negative, double margin);

/** Triplet hinge against a positive proxy and one negative proxy. */
LossOutput proxy_triplet_loss(std::span<const double> anchor,
                              std::span<const double> positive_proxy,
                              std::span<const double> negative_proxy, double margin);

struct SemihardBatchResult {
  double value = 0.0;
  Matrix grad;                    // one row per batch element
  std::size_t triplet_count = 0;  // anchor-positive pairs contributing
  bool single_class = false;      // no valid pair existed; value is 0
};

/**
 * Mean semihard triplet loss over all ordered same-class (anchor, positive)
 * pairs in the batch. The negative for a pair is the one closest to the
 * anchor among those farther than the positive; if none exists, the farthest
 * negative is used instead.
 */
SemihardBatchResult semihard_triplet_batch_loss(const Matrix& embeddings,
                                                const std::vector<int>& labels,
                                                double margin);

}  // namespace pdml
