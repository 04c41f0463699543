#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdml/embedding.hpp"
#include "pdml/optimizer.hpp"
#include "pdml/proxies.hpp"

namespace pdml {

enum class LossKind { proxy_nca, proxy_triplet, nca_batch, triplet_semihard };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(Assignment mode);
Assignment assignment_from_string(const std::string& s);
std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(Activation act);
Activation activation_from_string(const std::string& s);

struct DataConfig {
  std::string dataset_csv;
  std::string split_json;
};

struct ModelConfig {
  std::size_t embed_dim = 16;
  std::vector<LayerSpec> hidden;  // final affine layer to embed_dim is implicit
  std::uint64_t seed = 1;
};

struct TrainConfig {
  LossKind loss_kind = LossKind::proxy_nca;
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  double learning_rate = 0.02;
  double lr_decay_rate = 0.94;
  std::size_t lr_decay_every = 100;
  OptimizerKind optimizer = OptimizerKind::rms_adaptive;
  double rms_decay = 0.9;
  double margin = 1.0;
  double proxy_ratio = 1.0;
  Assignment assignment = Assignment::by_label;
  bool normalize_embeddings_in_loss = false;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  std::optional<double> proxy_init_scale;  // default 1/sqrt(embed_dim)
};

struct EvalConfig {
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::uint64_t kmeans_seed = 0;
  std::size_t kmeans_max_iters = 100;
};

struct BoundsConfig {
  double margin = 1.0;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::size_t max_triplets = 1000000;
};

/**
 * The run config file: JSON with sections data / model / train / eval /
 * bounds. Parsing is strict (unknown sections or keys are config errors);
 * serializing materializes every default so the echoed config reproduces the
 * run on its own.
 */
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  BoundsConfig bounds;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

RunConfig load_run_config(const std::string& path);

/**
 * Applies one `section.key=value` override to a raw config document. The
 * value is parsed as JSON when possible and as a string otherwise.
 */
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace pdml
