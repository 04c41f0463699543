#include <cstdio>
#include <iostream>
#include <memory>
#include <vector>

#include "commands.hpp"
#include "pdml/checkpoint.hpp"
#include "pdml/metrics.hpp"

namespace pdml::tools {

DataSplit load_data(const DataConfig& cfg) {
  if (cfg.dataset_csv.empty()) {
    throw ConfigError("data.dataset_csv is required");
  }
  const Dataset full = load_csv(cfg.dataset_csv);
  if (cfg.split_json.empty()) {
    return {full, full};
  }
  const ZeroShotSplit split = load_split(cfg.split_json);
  return {subset_by_classes(full, split.train_class_ids, full.name + "/train"),
          subset_by_classes(full, split.test_class_ids, full.name + "/eval")};
}

Dataset load_side(const std::string& csv_path, const std::string& split_path,
                  const std::string& side) {
  if (side != "train" && side != "eval") {
    throw ConfigError("side must be 'train' or 'eval', got '" + side + "'");
  }
  DataConfig cfg;
  cfg.dataset_csv = csv_path;
  cfg.split_json = split_path;
  DataSplit data = load_data(cfg);
  return side == "train" ? std::move(data.train) : std::move(data.eval);
}

namespace {

std::string checkpoint_name(std::size_t step) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "checkpoint_step_%06zu.pdml", step);
  return buf;
}

}  // namespace

TrainArtifacts run_training(const RunConfig& cfg, const std::string& out_dir) {
  ensure_directory(out_dir);
  const nlohmann::json echo = cfg.to_json();
  write_text_file(out_dir + "/config.json", echo.dump(2) + "\n");

  const DataSplit data = load_data(cfg.data);

  MetricsWriter writer(out_dir + "/metrics.jsonl");
  TrainArtifacts artifacts;

  TrainSinks sinks;
  sinks.metrics = [&](const MetricsRecord& record) {
    writer.write(record);
    if (record.recall_at_k) {
      const auto it = record.recall_at_k->find(1);
      if (it != record.recall_at_k->end()) artifacts.final_recall_at_1 = it->second;
      if (record.nmi) artifacts.final_nmi = *record.nmi;
    }
  };
  sinks.checkpoint = [&](std::size_t step, const EmbeddingModel& model,
                         const ProxySet& proxies) {
    save_checkpoint({model, proxies, echo, cfg.train.seed},
                    out_dir + "/" + checkpoint_name(step));
  };

  artifacts.result = train(cfg.model, cfg.train, data.train, data.eval, cfg.eval, sinks);
  save_checkpoint({artifacts.result.model, artifacts.result.proxies, echo, cfg.train.seed},
                  out_dir + "/checkpoint.pdml");
  return artifacts;
}

namespace {

struct TrainOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

void run(const TrainOptions& opts) {
  nlohmann::json doc = read_json_file(opts.config_path);
  for (const std::string& assignment : opts.overrides) {
    apply_override(doc, assignment);
  }
  const RunConfig cfg = RunConfig::from_json(doc);

  const std::string dir = resolve_output_dir(opts.out);
  const TrainArtifacts artifacts = run_training(cfg, dir);

  const TrainStats& stats = artifacts.result.stats;
  std::cout << "trained " << stats.steps_run << " steps ("
            << artifacts.result.proxies.count() << " proxies, final loss "
            << stats.final_loss << ")";
  if (artifacts.final_recall_at_1) {
    std::cout << ", final recall@1 " << *artifacts.final_recall_at_1;
  }
  std::cout << "\noutputs in " << dir << "\n";
}

}  // namespace

void register_train(CLI::App& app) {
  auto opts = std::make_shared<TrainOptions>();
  CLI::App* cmd = app.add_subcommand(
      "train", "Train embeddings and proxies per a run config file");
  cmd->add_option("-c,--config", opts->config_path, "Run config JSON")->required();
  cmd->add_option("--set", opts->overrides,
                  "Override a config field, e.g. --set train.steps=500");
  cmd->add_option("-o,--out", opts->out,
                  "Output directory (default $PDML_OUTPUT_ROOT or .)");
  cmd->callback([opts] { run(*opts); });
}

}  // namespace pdml::tools
