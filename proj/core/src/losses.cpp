#include "pdml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdml/errors.hpp"

namespace pdml {

namespace {

/** log(sum_i exp(v_i)), max-shifted for stability. */
double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double ranking_loss(double d_xy, double d_xz) {
  if (!std::isfinite(d_xy) || !std::isfinite(d_xz)) {
    throw UsageError("ranking_loss: distances must be finite");
  }
  return d_xy > d_xz ? 1.0 : 0.0;
}

LossOutput nca_loss(std::span<const double> anchor, std::span<const double> positive,
                    const Matrix& negatives) {
  if (negatives.rows == 0) throw UsageError("nca_loss: empty negative set");
  const std::size_t dim = anchor.size();
  if (positive.size() != dim || negatives.cols != dim) {
    throw UsageError("nca_loss: dimension mismatch");
  }

  const double d_pos = squared_distance(anchor, positive);
  std::vector<double> neg_logits(negatives.rows);  // -d(x, z)
  for (std::size_t z = 0; z < negatives.rows; ++z) {
    neg_logits[z] = -squared_distance(anchor, negatives.row(z));
  }

  const double lse = log_sum_exp(neg_logits);

  LossOutput out;
  out.value = d_pos + lse;

  // softmax over negatives of -d(x,z)
  std::vector<double> s(negatives.rows);
  for (std::size_t z = 0; z < negatives.rows; ++z) s[z] = std::exp(neg_logits[z] - lse);

  out.grad_anchor.assign(dim, 0.0);
  for (std::size_t z = 0; z < negatives.rows; ++z) {
    const auto zr = negatives.row(z);
    for (std::size_t j = 0; j < dim; ++j) out.grad_anchor[j] += s[z] * zr[j];
  }
  for (std::size_t j = 0; j < dim; ++j) {
    out.grad_anchor[j] = 2.0 * (out.grad_anchor[j] - positive[j]);
  }

  out.grad_positive.assign(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    out.grad_positive[j] = 2.0 * (positive[j] - anchor[j]);
  }

  out.grad_negatives.resize(negatives.rows);
  for (std::size_t z = 0; z < negatives.rows; ++z) {
    const auto zr = negatives.row(z);
    auto& g = out.grad_negatives[z];
    g.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) g[j] = 2.0 * s[z] * (anchor[j] - zr[j]);
  }
  return out;
}

LossOutput proxy_nca_loss(std::span<const double> anchor,
                          std::span<const double> positive_proxy,
                          const Matrix& negative_proxies) {
  return nca_loss(anchor, positive_proxy, negative_proxies);
}

LossOutput triplet_hinge_loss(std::span<const double> anchor,
                              std::span<const double> positive,
                              std::span<const double> negative, double margin) {
  const std::size_t dim = anchor.size();
  if (positive.size() != dim || negative.size() != dim) {
    throw UsageError("triplet_hinge_loss: dimension mismatch");
  }
  const double v =
      squared_distance(anchor, positive) + margin - squared_distance(anchor, negative);

  LossOutput out;
  out.grad_anchor.assign(dim, 0.0);
  out.grad_positive.assign(dim, 0.0);
  out.grad_negatives.resize(1);
  out.grad_negatives[0].assign(dim, 0.0);
  if (v <= 0.0) return out;  // inactive hinge; subgradient 0 at the kink

  out.value = v;
  for (std::size_t j = 0; j < dim; ++j) {
    out.grad_anchor[j] = 2.0 * (negative[j] - positive[j]);
    out.grad_positive[j] = 2.0 * (positive[j] - anchor[j]);
    out.grad_negatives[0][j] = 2.0 * (anchor[j] - negative[j]);
  }
  return out;
}

LossOutput proxy_triplet_loss(std::span<const double> anchor,
                              std::span<const double> positive_proxy,
                              std::span<const double> negative_proxy, double margin) {
  return triplet_hinge_loss(anchor, positive_proxy, negative_proxy, margin);
}

SemihardBatchResult semihard_triplet_batch_loss(const Matrix& embeddings,
                                                const std::vector<int>& labels,
                                                double margin) {
  const std::size_t n = embeddings.rows;
  if (labels.size() != n) {
    throw UsageError("semihard_triplet_batch_loss: labels/embeddings size mismatch");
  }

  SemihardBatchResult result;
  result.grad = Matrix(n, embeddings.cols);
  if (n == 0) {
    result.single_class = true;
    return result;
  }

  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist(i, j) = squared_distance(embeddings.row(i), embeddings.row(j));
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || labels[i] != labels[j]) continue;
      const double d_pos = dist(i, j);

      // Semihard pick: nearest negative farther than the positive; if none,
      // fall back to the farthest negative. Ties go to the lowest index.
      std::size_t pick = n;
      double best_semihard = std::numeric_limits<double>::infinity();
      std::size_t farthest = n;
      double best_far = -1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[i]) continue;
        const double d = dist(i, k);
        if (d > d_pos && d < best_semihard) {
          best_semihard = d;
          pick = k;
        }
        if (d > best_far) {
          best_far = d;
          farthest = k;
        }
      }
      if (farthest == n) continue;  // no negative exists for this pair
      if (pick == n) pick = farthest;

      ++result.triplet_count;
      const double v = d_pos + margin - dist(i, pick);
      if (v <= 0.0) continue;

      total += v;
      auto gi = result.grad.row(i);
      auto gj = result.grad.row(j);
      auto gk = result.grad.row(pick);
      const auto ei = embeddings.row(i);
      const auto ej = embeddings.row(j);
      const auto ek = embeddings.row(pick);
      for (std::size_t c = 0; c < embeddings.cols; ++c) {
        gi[c] += 2.0 * (ek[c] - ej[c]);
        gj[c] += 2.0 * (ej[c] - ei[c]);
        gk[c] += 2.0 * (ei[c] - ek[c]);
      }
    }
  }

  if (result.triplet_count == 0) {
    result.single_class = true;
    return result;
  }

  const double inv = 1.0 / static_cast<double>(result.triplet_count);
  result.value = total * inv;
  for (double& g : result.grad.data) g *= inv;
  return result;
}

}  // namespace pdml
