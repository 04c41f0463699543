#include "pdml/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "pdml/errors.hpp"

namespace pdml {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::proxy_nca: return "proxy_nca";
    case LossKind::proxy_triplet: return "proxy_triplet";
    case LossKind::nca_batch: return "nca_batch";
    case LossKind::triplet_semihard: return "triplet_semihard";
  }
  throw UsageError("unknown loss kind");
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "proxy_nca") return LossKind::proxy_nca;
  if (s == "proxy_triplet") return LossKind::proxy_triplet;
  if (s == "nca_batch") return LossKind::nca_batch;
  if (s == "triplet_semihard") return LossKind::triplet_semihard;
  throw ConfigError("unknown loss_kind '" + s +
                    "' (expected proxy_nca, proxy_triplet, nca_batch, or triplet_semihard)");
}

std::string to_string(Assignment mode) {
  return mode == Assignment::by_label ? "static" : "dynamic";
}

Assignment assignment_from_string(const std::string& s) {
  if (s == "static") return Assignment::by_label;
  if (s == "dynamic") return Assignment::nearest;
  throw ConfigError("unknown assignment '" + s + "' (expected static or dynamic)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "rms_adaptive";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "rms_adaptive") return OptimizerKind::rms_adaptive;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or rms_adaptive)");
}

std::string to_string(Activation act) {
  return act == Activation::identity ? "identity" : "rectifier";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "rectifier") return Activation::rectifier;
  throw ConfigError("unknown activation '" + s + "' (expected identity or rectifier)");
}

namespace {

/** Reads one config section strictly: every present key must be consumed. */
class SectionReader {
 public:
  SectionReader(const nlohmann::json& section, std::string prefix)
      : section_(section), prefix_(std::move(prefix)) {
    if (!section_.is_object()) {
      throw ConfigError("config section '" + prefix_ + "' must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& into) {
    seen_.insert(key);
    if (!section_.contains(key)) return;
    try {
      into = section_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + prefix_ + "." + key + "' has the wrong type");
    }
  }

  void read_string(const char* key, std::string& into) { read<std::string>(key, into); }

  bool has(const char* key) const { return section_.contains(key); }

  const nlohmann::json& raw(const char* key) {
    seen_.insert(key);
    return section_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : section_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown config key '" + prefix_ + "." + key + "'");
      }
    }
  }

 private:
  const nlohmann::json& section_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void validate(const RunConfig& cfg) {
  if (cfg.model.embed_dim == 0) throw ConfigError("model.embed_dim must be positive");
  if (cfg.train.batch_size < 2) throw ConfigError("train.batch_size must be at least 2");
  if (!(cfg.train.learning_rate > 0.0)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (!(cfg.train.lr_decay_rate > 0.0) || cfg.train.lr_decay_rate > 1.0) {
    throw ConfigError("train.lr_decay_rate must lie in (0, 1]");
  }
  if (cfg.train.lr_decay_every == 0) throw ConfigError("train.lr_decay_every must be positive");
  if (cfg.train.eval_every == 0) throw ConfigError("train.eval_every must be positive");
  if (!(cfg.train.proxy_ratio > 0.0)) throw ConfigError("train.proxy_ratio must be positive");
  if (cfg.train.rms_decay < 0.0 || cfg.train.rms_decay >= 1.0) {
    throw ConfigError("train.rms_decay must lie in [0, 1)");
  }
  if (!(cfg.train.margin >= 0.0)) throw ConfigError("train.margin must be nonnegative");
  if (cfg.train.proxy_init_scale && !(*cfg.train.proxy_init_scale > 0.0)) {
    throw ConfigError("train.proxy_init_scale must be positive");
  }
  if (cfg.eval.ks.empty()) throw ConfigError("eval.ks must be nonempty");
  for (std::size_t k : cfg.eval.ks) {
    if (k == 0) throw ConfigError("eval.ks entries must be positive");
  }
  if (cfg.eval.kmeans_max_iters == 0) {
    throw ConfigError("eval.kmeans_max_iters must be positive");
  }
  if (!(cfg.bounds.margin >= 0.0)) throw ConfigError("bounds.margin must be nonnegative");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> kSections = {"data", "model", "train", "eval",
                                                  "bounds"};
  for (const auto& [key, value] : j.items()) {
    if (!kSections.count(key)) {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }

  RunConfig cfg;

  if (j.contains("data")) {
    SectionReader r(j.at("data"), "data");
    r.read_string("dataset_csv", cfg.data.dataset_csv);
    r.read_string("split_json", cfg.data.split_json);
    r.finish();
  }

  if (j.contains("model")) {
    SectionReader r(j.at("model"), "model");
    r.read("embed_dim", cfg.model.embed_dim);
    r.read("seed", cfg.model.seed);
    if (r.has("hidden")) {
      const auto& hidden = r.raw("hidden");
      if (!hidden.is_array()) throw ConfigError("model.hidden must be an array");
      for (const auto& entry : hidden) {
        SectionReader h(entry, "model.hidden[]");
        LayerSpec spec;
        h.read("dim", spec.dim);
        std::string act = "rectifier";
        h.read_string("activation", act);
        spec.activation = activation_from_string(act);
        h.finish();
        if (spec.dim == 0) throw ConfigError("model.hidden[].dim must be positive");
        cfg.model.hidden.push_back(spec);
      }
    }
    r.finish();
  }

  if (j.contains("train")) {
    SectionReader r(j.at("train"), "train");
    std::string loss = to_string(cfg.train.loss_kind);
    std::string optimizer = to_string(cfg.train.optimizer);
    std::string assignment = to_string(cfg.train.assignment);
    r.read_string("loss_kind", loss);
    r.read("batch_size", cfg.train.batch_size);
    r.read("steps", cfg.train.steps);
    r.read("learning_rate", cfg.train.learning_rate);
    r.read("lr_decay_rate", cfg.train.lr_decay_rate);
    r.read("lr_decay_every", cfg.train.lr_decay_every);
    r.read_string("optimizer", optimizer);
    r.read("rms_decay", cfg.train.rms_decay);
    r.read("margin", cfg.train.margin);
    r.read("proxy_ratio", cfg.train.proxy_ratio);
    r.read_string("assignment", assignment);
    r.read("normalize_embeddings_in_loss", cfg.train.normalize_embeddings_in_loss);
    r.read("seed", cfg.train.seed);
    r.read("eval_every", cfg.train.eval_every);
    if (r.has("proxy_init_scale") && !r.raw("proxy_init_scale").is_null()) {
      double scale = 0.0;
      r.read("proxy_init_scale", scale);
      cfg.train.proxy_init_scale = scale;
    }
    r.finish();
    cfg.train.loss_kind = loss_kind_from_string(loss);
    cfg.train.optimizer = optimizer_from_string(optimizer);
    cfg.train.assignment = assignment_from_string(assignment);
  }

  if (j.contains("eval")) {
    SectionReader r(j.at("eval"), "eval");
    r.read("ks", cfg.eval.ks);
    r.read("kmeans_seed", cfg.eval.kmeans_seed);
    r.read("kmeans_max_iters", cfg.eval.kmeans_max_iters);
    r.finish();
  }

  if (j.contains("bounds")) {
    SectionReader r(j.at("bounds"), "bounds");
    r.read("margin", cfg.bounds.margin);
    r.read("samples", cfg.bounds.samples);
    r.read("seed", cfg.bounds.seed);
    r.read("max_triplets", cfg.bounds.max_triplets);
    r.finish();
  }

  validate(cfg);
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["data"] = {{"dataset_csv", data.dataset_csv}, {"split_json", data.split_json}};

  nlohmann::json hidden = nlohmann::json::array();
  for (const LayerSpec& spec : model.hidden) {
    hidden.push_back({{"dim", spec.dim}, {"activation", to_string(spec.activation)}});
  }
  j["model"] = {{"embed_dim", model.embed_dim},
                {"hidden", std::move(hidden)},
                {"seed", model.seed}};

  const double proxy_scale = train.proxy_init_scale.value_or(
      1.0 / std::sqrt(static_cast<double>(model.embed_dim)));
  j["train"] = {{"loss_kind", to_string(train.loss_kind)},
                {"batch_size", train.batch_size},
                {"steps", train.steps},
                {"learning_rate", train.learning_rate},
                {"lr_decay_rate", train.lr_decay_rate},
                {"lr_decay_every", train.lr_decay_every},
                {"optimizer", to_string(train.optimizer)},
                {"rms_decay", train.rms_decay},
                {"margin", train.margin},
                {"proxy_ratio", train.proxy_ratio},
                {"assignment", to_string(train.assignment)},
                {"normalize_embeddings_in_loss", train.normalize_embeddings_in_loss},
                {"seed", train.seed},
                {"eval_every", train.eval_every},
                {"proxy_init_scale", proxy_scale}};

  j["eval"] = {{"ks", eval.ks},
               {"kmeans_seed", eval.kmeans_seed},
               {"kmeans_max_iters", eval.kmeans_max_iters}};

  j["bounds"] = {{"margin", bounds.margin},
                 {"samples", bounds.samples},
                 {"seed", bounds.seed},
                 {"max_triplets", bounds.max_triplets}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(value_text);
  } catch (const nlohmann::json::exception&) {
    value = value_text;  // unquoted strings arrive as-is
  }

  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t sep = path.find('.', start);
    const std::string key = path.substr(start, sep - start);
    if (key.empty()) {
      throw ConfigError("override '" + assignment + "' has an empty path component");
    }
    if (sep == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = sep + 1;
  }
}

}  // namespace pdml
