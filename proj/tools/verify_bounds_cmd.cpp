#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <vector>

#include "commands.hpp"
#include "pdml/bounds.hpp"
#include "pdml/checkpoint.hpp"
#include "pdml/embedding.hpp"
#include "pdml/rng.hpp"

namespace pdml::tools {

namespace {

// Negative-set size cap for sampled NCA loss instances; the bound holds for
// any negative set, this just keeps large datasets affordable.
constexpr std::size_t kMaxNcaNegatives = 512;

struct VerifyBoundsOptions {
  std::string checkpoint_path;
  std::string data_csv;
  std::string split_json;
  std::string side = "eval";
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  double margin = 1.0;
  std::size_t max_triplets = 1000000;
  bool no_rescale = false;
  bool exhaustive = false;
  std::string report_path;
};

std::vector<TripletSample> sample_triplets(Rng& rng, std::size_t n, std::size_t count) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<TripletSample> samples(count);
  for (auto& s : samples) {
    s.x = pick(rng);
    do s.y = pick(rng); while (s.y == s.x);
    do s.z = pick(rng); while (s.z == s.x || s.z == s.y);
  }
  return samples;
}

std::vector<NcaSample> sample_nca(Rng& rng, std::size_t n, std::size_t count) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t num_negatives = std::min(n - 2, kMaxNcaNegatives);
  std::vector<std::size_t> pool(n);

  std::vector<NcaSample> samples(count);
  for (auto& s : samples) {
    s.x = pick(rng);
    do s.y = pick(rng); while (s.y == s.x);

    pool.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i != s.x && i != s.y) pool.push_back(i);
    }
    for (std::size_t i = 0; i < num_negatives; ++i) {  // partial Fisher-Yates
      std::uniform_int_distribution<std::size_t> rest(i, pool.size() - 1);
      std::swap(pool[i], pool[rest(rng)]);
    }
    s.negatives.assign(pool.begin(), pool.begin() + num_negatives);
  }
  return samples;
}

nlohmann::json report_json(const BoundReport& r, bool gates_exit) {
  nlohmann::json j;
  j["bound"] = r.bound_name;
  j["distance_convention"] = r.distance_convention;
  j["samples_checked"] = r.samples_checked;
  j["violations"] = r.violations;
  j["precondition_failures"] = r.precondition_failures;
  j["max_slack"] = r.max_slack;
  j["mean_slack"] = r.mean_slack;
  j["epsilon"] = r.epsilon_used;
  j["alpha"] = r.alpha_used;
  j["norms"] = {{"embedding_mean", r.norm_stats.embedding_mean},
                {"embedding_stddev", r.norm_stats.embedding_stddev},
                {"proxy_mean", r.norm_stats.proxy_mean},
                {"proxy_stddev", r.norm_stats.proxy_stddev}};
  j["gates_exit"] = gates_exit;
  return j;
}

void run(const VerifyBoundsOptions& opts, int& exit_code) {
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint_path);
  const Dataset ds = load_side(opts.data_csv, opts.split_json, opts.side);

  if (ckpt.model.input_dim() != ds.dim()) {
    throw ConfigError("checkpoint expects " + std::to_string(ckpt.model.input_dim()) +
                      "-dim inputs but " + opts.data_csv + " has " +
                      std::to_string(ds.dim()) + " dims");
  }
  if (ds.size() < 3) throw ConfigError("bound checks need at least 3 points");
  if (ckpt.proxies.count() < 2) throw ConfigError("bound checks need at least 2 proxies");

  const Matrix embeddings = embed_all(ckpt.model, ds.points);
  const Matrix& proxies = ckpt.proxies.vectors;

  const NormalizedConfig nc = normalize_config(embeddings, proxies);

  // Assignment for the loss bounds: nearest proxy on the unit sphere, the
  // choice that both conventions' epsilons are defined against.
  std::vector<int> point_to_proxy(ds.size());
  double epsilon_unit = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(nc.unit_embeddings.row(i), nc.unit_proxies.row(0));
    for (std::size_t p = 1; p < nc.unit_proxies.rows; ++p) {
      const double d = squared_distance(nc.unit_embeddings.row(i), nc.unit_proxies.row(p));
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    point_to_proxy[i] = static_cast<int>(best);
    epsilon_unit = std::max(epsilon_unit, best_d);
  }

  Matrix prop_embeddings = embeddings;
  Matrix prop_proxies = proxies;
  if (!opts.no_rescale) {
    rescale_rows_to_norm(prop_embeddings, nc.n_x);
    rescale_rows_to_norm(prop_proxies, nc.n_p);
  }

  Rng rng(derive_seed(opts.seed, 0));
  const std::vector<TripletSample> triplets = sample_triplets(rng, ds.size(), opts.samples);
  const std::vector<NcaSample> nca_samples = sample_nca(rng, ds.size(), opts.samples);

  const BoundReport ordinal = verify_ordinal_preservation(embeddings, triplets, proxies);
  const BoundReport expectation =
      verify_ranking_expectation_bound(embeddings, triplets, proxies);
  const NcaBoundReports nca =
      verify_nca_bound(prop_embeddings, nca_samples, prop_proxies, point_to_proxy);
  const BoundReport triplet =
      verify_triplet_bound(prop_embeddings, triplets, prop_proxies, point_to_proxy,
                           opts.margin);

  TotalLossOptions total_opts;
  total_opts.margin = opts.margin;
  total_opts.alpha = nc.alpha();
  total_opts.delta = (1.0 - nc.alpha()) * opts.margin + 2.0 * std::sqrt(epsilon_unit);
  total_opts.max_triplets = opts.max_triplets;
  total_opts.allow_sampling = !opts.exhaustive;
  total_opts.seed = derive_seed(opts.seed, 1);
  const TotalLossBoundReport total = verify_total_loss_bound(
      prop_embeddings, ds.labels, prop_proxies, point_to_proxy, total_opts);

  nlohmann::json out = nlohmann::json::array();
  out.push_back(report_json(ordinal, true));
  out.push_back(report_json(expectation, true));
  out.push_back(report_json(nca.stated, true));
  out.push_back(report_json(nca.tight, false));
  out.push_back(report_json(triplet, true));
  nlohmann::json total_json = report_json(total.report, true);
  total_json["estimated"] = total.estimated;
  total_json["lhs"] = total.lhs;
  total_json["rhs"] = total.rhs;
  out.push_back(total_json);

  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!opts.report_path.empty()) write_text_file(opts.report_path, text);

  const std::size_t gating_violations = ordinal.violations + expectation.violations +
                                        nca.stated.violations + triplet.violations +
                                        total.report.violations;
  if (gating_violations > 0) {
    std::cerr << gating_violations << " bound violation(s)\n";
    exit_code = 4;
  }
}

}  // namespace

void register_verify_bounds(CLI::App& app, int& exit_code) {
  auto opts = std::make_shared<VerifyBoundsOptions>();
  CLI::App* cmd = app.add_subcommand(
      "verify-bounds", "Check the proxy approximation inequalities numerically");
  cmd->add_option("--checkpoint", opts->checkpoint_path, "Checkpoint file")->required();
  cmd->add_option("--data", opts->data_csv, "Dataset CSV")->required();
  cmd->add_option("--split", opts->split_json, "Zero-shot split JSON");
  cmd->add_option("--side", opts->side, "Which split half to audit")
      ->check(CLI::IsMember({"train", "eval"}))
      ->capture_default_str();
  cmd->add_option("--samples", opts->samples, "Monte-Carlo samples per bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--margin", opts->margin, "Triplet margin M")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--max-triplets", opts->max_triplets,
                  "Total-loss population cap before sampling kicks in")
      ->capture_default_str();
  cmd->add_flag("--no-rescale", opts->no_rescale,
                "Audit raw embeddings instead of rescaling to constant norms");
  cmd->add_flag("--exhaustive", opts->exhaustive,
                "Fail instead of sampling when the triplet population exceeds the cap");
  cmd->add_option("-o,--out", opts->report_path, "Also write the report JSON here");
  cmd->callback([opts, &exit_code] { run(*opts, exit_code); });
}

}  // namespace pdml::tools
