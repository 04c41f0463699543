#include "pdml/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "pdml/errors.hpp"
#include "pdml/eval.hpp"
#include "pdml/losses.hpp"
#include "pdml/optimizer.hpp"
#include "pdml/rng.hpp"

namespace pdml {

namespace {

// Seed stream tags for the independent RNG consumers of train.seed.
constexpr std::uint64_t kProxyStream = 1;
constexpr std::uint64_t kBatchStream = 2;

struct BatchGradients {
  std::vector<std::vector<double>> embedding;  // per batch element
  Matrix proxies;                              // full proxy-shaped accumulator
};

/** Uniform anchor sampling with replacement. */
std::vector<std::size_t> sample_uniform(Rng& rng, std::size_t n, std::size_t batch) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> anchors(batch);
  for (auto& a : anchors) a = pick(rng);
  return anchors;
}

/**
 * Class-balanced batch: ceil(batch/4) classes, four instances each, truncated
 * to the batch size. Classes come from a shuffle (cycled if too few exist);
 * instances are drawn without replacement where the class allows it.
 */
std::vector<std::size_t> sample_class_balanced(
    Rng& rng, const std::vector<std::vector<std::size_t>>& by_class, std::size_t batch) {
  const std::size_t wanted_classes = (batch + 3) / 4;
  std::vector<std::size_t> class_order(by_class.size());
  std::iota(class_order.begin(), class_order.end(), 0);
  std::shuffle(class_order.begin(), class_order.end(), rng);

  std::vector<std::size_t> anchors;
  anchors.reserve(batch);
  std::vector<std::size_t> member_order;
  for (std::size_t c = 0; anchors.size() < batch && c < wanted_classes; ++c) {
    const auto& members = by_class[class_order[c % class_order.size()]];
    member_order = members;
    std::shuffle(member_order.begin(), member_order.end(), rng);
    for (std::size_t i = 0; i < 4 && anchors.size() < batch; ++i) {
      if (member_order.empty()) break;
      anchors.push_back(member_order[i % member_order.size()]);
    }
  }
  return anchors;
}

/** Gradient of the loss w.r.t. a raw vector that was unit-normalized before
 *  entering the loss, or the loss gradient itself when normalization is off. */
std::vector<double> pull_back(bool normalized, const UnitizeResult& unit,
                              const std::vector<double>& grad) {
  return normalized ? unitize_backward(unit, grad) : grad;
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const Dataset& train_ds, const Dataset& eval_ds,
                  const EvalConfig& eval_cfg, const TrainSinks& sinks) {
  if (train_ds.size() == 0 || eval_ds.size() == 0) {
    throw ConfigError("train: datasets must be nonempty");
  }
  if (cfg.batch_size < 2) throw ConfigError("train: batch_size must be at least 2");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(cfg.lr_decay_rate > 0.0) || cfg.lr_decay_rate > 1.0) {
    throw ConfigError("train: lr_decay_rate must lie in (0, 1]");
  }
  for (std::size_t k : eval_cfg.ks) {
    if (k == 0 || k >= eval_ds.size()) {
      throw ConfigError("train: eval k = " + std::to_string(k) +
                        " is out of range for " + std::to_string(eval_ds.size()) +
                        " eval points");
    }
  }

  std::vector<LayerSpec> layer_specs = model_cfg.hidden;
  layer_specs.push_back({model_cfg.embed_dim, Activation::identity});

  TrainResult result;
  result.model = init_model(train_ds.dim(), layer_specs, model_cfg.seed);

  const double proxy_scale = cfg.proxy_init_scale.value_or(
      1.0 / std::sqrt(static_cast<double>(model_cfg.embed_dim)));
  result.proxies = init_proxies(train_ds.num_classes, cfg.proxy_ratio,
                                model_cfg.embed_dim, proxy_scale,
                                derive_seed(cfg.seed, kProxyStream), cfg.assignment);

  const bool proxy_loss =
      cfg.loss_kind == LossKind::proxy_nca || cfg.loss_kind == LossKind::proxy_triplet;
  if (proxy_loss && result.proxies.count() < 2) {
    throw ConfigError("train: proxy losses need at least 2 proxies");
  }
  result.stats.negatives_per_anchor = proxy_loss ? result.proxies.count() - 1 : 0;

  Optimizer optimizer(cfg.optimizer, cfg.rms_decay);
  // Parameter groups: weight+bias per layer, then the proxy matrix.
  const std::size_t proxy_group = 2 * result.model.layers.size();

  Rng batch_rng(derive_seed(cfg.seed, kBatchStream));
  const auto by_class = train_ds.indices_by_class();
  const bool balanced_batches = cfg.loss_kind == LossKind::triplet_semihard ||
                                cfg.loss_kind == LossKind::nca_batch;

  const auto start_time = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&start_time] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_time)
        .count();
  };

  const auto run_eval = [&](std::size_t step) {
    const Matrix eval_embeddings = embed_all(result.model, eval_ds.points);
    const RetrievalResult retrieval =
        recall_at_k(eval_embeddings, eval_ds.labels, eval_cfg.ks);
    const ClusteringResult clustering =
        cluster_quality(eval_embeddings, eval_ds.labels, eval_ds.num_classes,
                        eval_cfg.kmeans_seed, eval_cfg.kmeans_max_iters);
    const ApproxError approx = proxy_approx_error(eval_embeddings, result.proxies,
                                                  DistanceKind::squared_euclidean);
    MetricsRecord record;
    record.step = step;
    record.recall_at_k = retrieval.recall_at;
    record.nmi = clustering.nmi;
    record.epsilon = approx.epsilon;
    record.wall_clock_ms = elapsed_ms();
    if (sinks.metrics) sinks.metrics(record);
    if (sinks.checkpoint) sinks.checkpoint(step, result.model, result.proxies);
  };

  const std::size_t embed_dim = model_cfg.embed_dim;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const double lr =
        cfg.learning_rate *
        std::pow(cfg.lr_decay_rate,
                 static_cast<double>((step - 1) / cfg.lr_decay_every));

    const std::vector<std::size_t> anchors =
        balanced_batches ? sample_class_balanced(batch_rng, by_class, cfg.batch_size)
                         : sample_uniform(batch_rng, train_ds.size(), cfg.batch_size);

    // Forward every batch element, keeping caches for the backward pass.
    std::vector<ForwardCache> caches(anchors.size());
    Matrix embeddings(anchors.size(), embed_dim);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      embeddings.set_row(i, embed(result.model, train_ds.points.row(anchors[i]), caches[i]));
    }

    std::vector<UnitizeResult> unit_embeddings(anchors.size());
    std::vector<UnitizeResult> unit_proxies(result.proxies.count());
    Matrix loss_embeddings = embeddings;
    Matrix loss_proxies = result.proxies.vectors;
    if (cfg.normalize_embeddings_in_loss) {
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        unit_embeddings[i] = unitize(embeddings.row(i));
        loss_embeddings.set_row(i, unit_embeddings[i].unit);
      }
      for (std::size_t p = 0; p < result.proxies.count(); ++p) {
        unit_proxies[p] = unitize(result.proxies.vectors.row(p));
        loss_proxies.set_row(p, unit_proxies[p].unit);
      }
    }

    BatchGradients grads;
    grads.embedding.assign(anchors.size(), std::vector<double>(embed_dim, 0.0));
    grads.proxies = Matrix(result.proxies.count(), result.proxies.dim());

    double batch_loss = 0.0;
    bool skipped = false;
    std::vector<int> positive_proxy(anchors.size(), -1);

    if (proxy_loss) {
      const std::size_t num_proxies = result.proxies.count();
      Matrix negatives(num_proxies - 1, embed_dim);
      std::vector<std::size_t> negative_ids(num_proxies - 1);
      const ProxySet loss_proxy_set{loss_proxies, cfg.assignment,
                                    result.proxies.label_to_proxy,
                                    result.proxies.proxy_per_class_ratio};

      for (std::size_t i = 0; i < anchors.size(); ++i) {
        const std::size_t pos =
            cfg.assignment == Assignment::by_label
                ? assign_static(loss_proxy_set, train_ds.labels[anchors[i]])
                : assign_dynamic(loss_embeddings.row(i), loss_proxy_set);
        positive_proxy[i] = static_cast<int>(pos);

        std::size_t m = 0;
        for (std::size_t p = 0; p < num_proxies; ++p) {
          if (p == pos) continue;
          negatives.set_row(m, loss_proxies.row(p));
          negative_ids[m] = p;
          ++m;
        }

        if (cfg.loss_kind == LossKind::proxy_nca) {
          const LossOutput out =
              proxy_nca_loss(loss_embeddings.row(i), loss_proxies.row(pos), negatives);
          batch_loss += out.value;
          add_scaled(grads.embedding[i], 1.0, out.grad_anchor);
          add_scaled(grads.proxies.row(pos), 1.0,
                     pull_back(cfg.normalize_embeddings_in_loss, unit_proxies[pos],
                               out.grad_positive));
          for (std::size_t z = 0; z < negative_ids.size(); ++z) {
            add_scaled(grads.proxies.row(negative_ids[z]), 1.0,
                       pull_back(cfg.normalize_embeddings_in_loss,
                                 unit_proxies[negative_ids[z]], out.grad_negatives[z]));
          }
        } else {
          // One hinge per negative proxy, averaged, so every proxy triplet
          // around the anchor contributes.
          const double inv = 1.0 / static_cast<double>(negative_ids.size());
          for (std::size_t z = 0; z < negative_ids.size(); ++z) {
            const LossOutput out =
                proxy_triplet_loss(loss_embeddings.row(i), loss_proxies.row(pos),
                                   negatives.row(z), cfg.margin);
            batch_loss += inv * out.value;
            add_scaled(grads.embedding[i], inv, out.grad_anchor);
            add_scaled(grads.proxies.row(pos), inv,
                       pull_back(cfg.normalize_embeddings_in_loss, unit_proxies[pos],
                                 out.grad_positive));
            add_scaled(grads.proxies.row(negative_ids[z]), inv,
                       pull_back(cfg.normalize_embeddings_in_loss,
                                 unit_proxies[negative_ids[z]], out.grad_negatives[0]));
          }
        }
      }

      batch_loss /= static_cast<double>(anchors.size());
      const double inv_batch = 1.0 / static_cast<double>(anchors.size());
      for (auto& g : grads.embedding) {
        for (double& v : g) v *= inv_batch;
      }
      for (double& v : grads.proxies.data) v *= inv_batch;
    } else if (cfg.loss_kind == LossKind::triplet_semihard) {
      std::vector<int> batch_labels(anchors.size());
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        batch_labels[i] = train_ds.labels[anchors[i]];
      }
      const SemihardBatchResult out =
          semihard_triplet_batch_loss(loss_embeddings, batch_labels, cfg.margin);
      if (out.single_class) {
        skipped = true;
        ++result.stats.skipped_steps;
      } else {
        batch_loss = out.value;
        for (std::size_t i = 0; i < anchors.size(); ++i) {
          add_scaled(grads.embedding[i], 1.0, out.grad.row(i));
        }
      }
    } else {  // nca_batch
      std::vector<int> batch_labels(anchors.size());
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        batch_labels[i] = train_ds.labels[anchors[i]];
      }
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        std::vector<std::size_t> negative_ids;
        for (std::size_t k = 0; k < anchors.size(); ++k) {
          if (batch_labels[k] != batch_labels[i]) negative_ids.push_back(k);
        }
        if (negative_ids.empty()) continue;
        Matrix negatives(negative_ids.size(), embed_dim);
        for (std::size_t z = 0; z < negative_ids.size(); ++z) {
          negatives.set_row(z, loss_embeddings.row(negative_ids[z]));
        }
        for (std::size_t j = 0; j < anchors.size(); ++j) {
          if (j == i || batch_labels[j] != batch_labels[i]) continue;
          const LossOutput out =
              nca_loss(loss_embeddings.row(i), loss_embeddings.row(j), negatives);
          ++pairs;
          batch_loss += out.value;
          add_scaled(grads.embedding[i], 1.0, out.grad_anchor);
          add_scaled(grads.embedding[j], 1.0, out.grad_positive);
          for (std::size_t z = 0; z < negative_ids.size(); ++z) {
            add_scaled(grads.embedding[negative_ids[z]], 1.0, out.grad_negatives[z]);
          }
        }
      }
      if (pairs == 0) {
        skipped = true;
        ++result.stats.skipped_steps;
      } else {
        const double inv = 1.0 / static_cast<double>(pairs);
        batch_loss *= inv;
        for (auto& g : grads.embedding) {
          for (double& v : g) v *= inv;
        }
      }
    }

    if (sinks.batch) {
      sinks.batch(BatchInfo{step, anchors, positive_proxy});
    }

    if (!std::isfinite(batch_loss)) {
      MetricsRecord diagnostic;
      diagnostic.step = step;
      diagnostic.loss = batch_loss;
      diagnostic.learning_rate = lr;
      diagnostic.wall_clock_ms = elapsed_ms();
      if (sinks.metrics) sinks.metrics(diagnostic);
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }

    if (!skipped) {
      ModelGradient model_grad = zero_gradient(result.model);
      std::vector<double> grad_embedding;
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        grad_embedding = pull_back(cfg.normalize_embeddings_in_loss, unit_embeddings[i],
                                   grads.embedding[i]);
        embed_backward(result.model, caches[i], grad_embedding, model_grad);
      }

      for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
        optimizer.update(2 * l, result.model.layers[l].weight.data,
                         model_grad.weight[l].data, lr);
        optimizer.update(2 * l + 1, result.model.layers[l].bias, model_grad.bias[l], lr);
      }
      if (proxy_loss) {
        optimizer.update(proxy_group, result.proxies.vectors.data, grads.proxies.data, lr);
      }
    }

    MetricsRecord record;
    record.step = step;
    record.loss = batch_loss;
    record.learning_rate = lr;
    record.wall_clock_ms = elapsed_ms();
    if (sinks.metrics) sinks.metrics(record);

    result.stats.steps_run = step;
    result.stats.final_loss = batch_loss;
    result.stats.final_learning_rate = lr;

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      run_eval(step);
    }
  }

  return result;
}

TripletSpaceReport triplet_space_report(const Dataset& ds, std::size_t batch_size) {
  if (batch_size < 2) throw ConfigError("triplet_space_report: batch_size must be >= 2");

  TripletSpaceReport report;
  const std::size_t n = ds.size();
  const std::size_t k = ds.num_classes;

  std::vector<std::size_t> class_sizes(k, 0);
  for (int label : ds.labels) ++class_sizes[static_cast<std::size_t>(label)];

  report.balanced =
      k > 0 && std::all_of(class_sizes.begin(), class_sizes.end(),
                           [&](std::size_t s) { return s == class_sizes[0]; });

  if (k < 2) {
    return report;  // no valid triplet without a second class
  }

  if (report.balanced) {
    // n^2 (n-k) (k-1) / k^2; exact in integers for balanced classes.
    report.total_triplets = n * n * (n - k) * (k - 1) / (k * k);
  } else {
    for (std::size_t c = 0; c < k; ++c) {
      report.total_triplets += class_sizes[c] * (class_sizes[c] - 1) * (n - class_sizes[c]);
    }
  }

  // Capacity of one class-balanced batch (ceil(b/4) classes, evenly filled):
  // anchors * same-class partners * other-class negatives, O(b^3).
  const std::size_t classes_in_batch = std::min((batch_size + 3) / 4, k);
  if (classes_in_batch >= 2) {
    const std::size_t group = batch_size / classes_in_batch;
    if (group >= 2) {
      const std::size_t used = classes_in_batch * group;
      report.batch_capacity = used * (group - 1) * (used - group);
    }
  }
  if (report.total_triplets > 0 && report.batch_capacity > 0) {
    report.batches_to_cover =
        (report.total_triplets + report.batch_capacity - 1) / report.batch_capacity;
  }
  return report;
}

}  // namespace pdml
