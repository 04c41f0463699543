#pragma once

#include <functional>
#include <vector>

#include "pdml/config.hpp"
#include "pdml/dataset.hpp"
#include "pdml/embedding.hpp"
#include "pdml/metrics.hpp"
#include "pdml/proxies.hpp"

namespace pdml {

/** Counters accumulated over a training run, mostly for instrumentation. */
struct TrainStats {
  std::size_t steps_run = 0;
  double final_loss = 0.0;
  double final_learning_rate = 0.0;
  std::size_t skipped_steps = 0;           // semihard batches without a valid pair
  std::size_t negatives_per_anchor = 0;    // proxy losses: proxies referenced per anchor
};

struct TrainResult {
  EmbeddingModel model;
  ProxySet proxies;
  TrainStats stats;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;
using CheckpointSink =
    std::function<void(std::size_t step, const EmbeddingModel&, const ProxySet&)>;

/** Per-step view of the sampled batch and its proxy choices, for tests. */
struct BatchInfo {
  std::size_t step = 0;
  std::vector<std::size_t> anchors;        // dataset indices
  std::vector<int> positive_proxy;         // per anchor; -1 for non-proxy losses
};
using BatchHook = std::function<void(const BatchInfo&)>;

struct TrainSinks {
  MetricsSink metrics;
  CheckpointSink checkpoint;  // called on eval steps
  BatchHook batch;            // called every step before the update
};

/**
 * The proxy training loop: sample anchors, pair them with their assigned
 * (or nearest) proxy against all remaining proxies, backpropagate through
 * embeddings and proxies alike, and apply the optimizer to both. Evaluation
 * records (recall, NMI, worst nearest-proxy distance on eval_ds) are emitted
 * every eval_every steps and at the final step. Deterministic per seed.
 *
 * A non-finite loss aborts with a numeric error after emitting a diagnostic
 * record, leaving previously written checkpoints in place.
 */
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const Dataset& train_ds, const Dataset& eval_ds,
                  const EvalConfig& eval_cfg, const TrainSinks& sinks = {});

struct TripletSpaceReport {
  std::size_t total_triplets = 0;       // ordered (x, y, z), c(x)=c(y)!=c(z), x!=y
  bool balanced = false;                // all classes equal size (closed form used)
  std::size_t batch_capacity = 0;       // triplets representable in one batch
  std::size_t batches_to_cover = 0;     // ceil(total / capacity)
};

/** Size of the triplet space a triplet loss would have to cover, against the
 *  capacity of one batch of the given size. */
TripletSpaceReport triplet_space_report(const Dataset& ds, std::size_t batch_size);

}  // namespace pdml
