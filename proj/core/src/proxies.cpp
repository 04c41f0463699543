#include "pdml/proxies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdml/errors.hpp"
#include "pdml/rng.hpp"

namespace pdml {

FractionalAssignment fractional_preassign(std::size_t num_labels, double ratio,
                                          std::uint64_t seed) {
  if (num_labels < 2) {
    throw ConfigError("fractional_preassign: need at least 2 labels");
  }
  if (!(ratio > 0.0)) {
    throw ConfigError("fractional_preassign: ratio must be positive");
  }

  FractionalAssignment out;
  const auto requested =
      static_cast<std::size_t>(std::ceil(static_cast<double>(num_labels) * ratio));
  out.num_proxies = requested;
  if (out.num_proxies < 2) {
    out.num_proxies = 2;
    out.clamped = true;
  }

  std::vector<int> order(num_labels);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Round-robin over the shuffled labels keeps per-proxy counts within one.
  out.label_to_proxy.assign(num_labels, 0);
  for (std::size_t i = 0; i < num_labels; ++i) {
    out.label_to_proxy[static_cast<std::size_t>(order[i])] =
        static_cast<int>(i % out.num_proxies);
  }
  return out;
}

ProxySet init_proxies(std::size_t num_labels, double ratio, std::size_t dim,
                      double scale, std::uint64_t seed, Assignment mode) {
  if (num_labels < 2) {
    throw ConfigError("init_proxies: need at least 2 proxies, got " +
                      std::to_string(num_labels) + " labels");
  }
  if (dim == 0) throw ConfigError("init_proxies: dim must be positive");
  if (!(scale > 0.0)) throw ConfigError("init_proxies: scale must be positive");

  ProxySet proxies;
  proxies.mode = mode;
  proxies.proxy_per_class_ratio = ratio;

  std::size_t count = 0;
  if (ratio == 1.0) {
    count = num_labels;
    proxies.label_to_proxy.resize(num_labels);
    std::iota(proxies.label_to_proxy.begin(), proxies.label_to_proxy.end(), 0);
  } else {
    auto frac = fractional_preassign(num_labels, ratio, derive_seed(seed, 1));
    count = frac.num_proxies;
    proxies.label_to_proxy = std::move(frac.label_to_proxy);
  }
  if (mode == Assignment::nearest) proxies.label_to_proxy.clear();

  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  proxies.vectors = Matrix(count, dim);
  for (double& v : proxies.vectors.data) v = dist(rng);
  return proxies;
}

std::size_t assign_static(const ProxySet& proxies, int label) {
  if (proxies.mode != Assignment::by_label) {
    throw UsageError("assign_static: proxy set is not statically assigned");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= proxies.label_to_proxy.size()) {
    throw UsageError("assign_static: unknown label " + std::to_string(label));
  }
  return static_cast<std::size_t>(proxies.label_to_proxy[static_cast<std::size_t>(label)]);
}

std::size_t assign_dynamic(std::span<const double> embedding, const ProxySet& proxies) {
  if (proxies.count() == 0) throw UsageError("assign_dynamic: empty proxy set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < proxies.count(); ++p) {
    const double d = squared_distance(embedding, proxies.vectors.row(p));
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = p;
    }
  }
  return best;
}

ApproxError proxy_approx_error(const Matrix& embeddings, const ProxySet& proxies,
                               DistanceKind kind) {
  if (embeddings.rows == 0) throw UsageError("proxy_approx_error: empty point set");
  if (proxies.count() == 0) throw UsageError("proxy_approx_error: empty proxy set");

  ApproxError out;
  out.epsilon = -1.0;
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < proxies.count(); ++p) {
      nearest = std::min(nearest, squared_distance(embeddings.row(i), proxies.vectors.row(p)));
    }
    if (nearest > out.epsilon) {
      out.epsilon = nearest;
      out.argmax_index = i;
    }
  }
  if (kind == DistanceKind::euclidean) out.epsilon = std::sqrt(out.epsilon);
  return out;
}

}  // namespace pdml
