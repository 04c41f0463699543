#include <iostream>
#include <memory>
#include <vector>

#include "commands.hpp"
#include "pdml/checkpoint.hpp"
#include "pdml/eval.hpp"
#include "pdml/proxies.hpp"

namespace pdml::tools {

namespace {

struct EvalOptions {
  std::string checkpoint_path;
  std::string data_csv;
  std::string split_json;
  std::string side = "eval";
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::uint64_t kmeans_seed = 0;
  std::size_t kmeans_max_iters = 100;
  std::string report_path;
};

void run(const EvalOptions& opts) {
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint_path);
  const Dataset ds = load_side(opts.data_csv, opts.split_json, opts.side);

  if (ckpt.model.input_dim() != ds.dim()) {
    throw ConfigError("checkpoint expects " + std::to_string(ckpt.model.input_dim()) +
                      "-dim inputs but " + opts.data_csv + " has " +
                      std::to_string(ds.dim()) + " dims");
  }

  const Matrix embeddings = embed_all(ckpt.model, ds.points);
  const RetrievalResult retrieval = recall_at_k(embeddings, ds.labels, opts.ks);
  const ClusteringResult clustering =
      cluster_quality(embeddings, ds.labels, ds.num_classes, opts.kmeans_seed,
                      opts.kmeans_max_iters);
  const ApproxError approx =
      proxy_approx_error(embeddings, ckpt.proxies, DistanceKind::squared_euclidean);

  nlohmann::json report;
  report["dataset"] = ds.name;
  report["points"] = ds.size();
  report["classes"] = ds.num_classes;
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : retrieval.recall_at) recall[std::to_string(k)] = v;
  report["recall_at"] = recall;
  report["num_queries"] = retrieval.num_queries;
  report["nmi"] = clustering.nmi;
  report["kmeans_inertia"] = clustering.kmeans_inertia;
  report["epsilon"] = approx.epsilon;

  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!opts.report_path.empty()) write_text_file(opts.report_path, text);
}

}  // namespace

void register_eval(CLI::App& app) {
  auto opts = std::make_shared<EvalOptions>();
  CLI::App* cmd = app.add_subcommand(
      "eval", "Evaluate a checkpoint: retrieval recall, clustering NMI, proxy error");
  cmd->add_option("--checkpoint", opts->checkpoint_path, "Checkpoint file")->required();
  cmd->add_option("--data", opts->data_csv, "Dataset CSV")->required();
  cmd->add_option("--split", opts->split_json, "Zero-shot split JSON");
  cmd->add_option("--side", opts->side, "Which split half to evaluate")
      ->check(CLI::IsMember({"train", "eval"}))
      ->capture_default_str();
  cmd->add_option("--ks", opts->ks, "Recall@k cutoffs")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--kmeans-seed", opts->kmeans_seed, "Clustering seed")
      ->capture_default_str();
  cmd->add_option("--kmeans-max-iters", opts->kmeans_max_iters, "Lloyd iteration cap")
      ->capture_default_str();
  cmd->add_option("-o,--out", opts->report_path, "Also write the report JSON here");
  cmd->callback([opts] { run(*opts); });
}

}  // namespace pdml::tools
