#include <cstdio>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include "commands.hpp"

namespace pdml::tools {

namespace {

struct SweepOptions {
  std::string config_path;
  std::vector<double> ratios;
  std::vector<std::string> overrides;
  std::string out;
  bool parallel = false;
};

struct SweepRow {
  double ratio = 0.0;
  std::size_t num_proxies = 0;
  std::optional<double> recall_at_1;
  std::optional<double> nmi;
  std::string status = "ok";
};

std::string format_ratio(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", ratio);
  return buf;
}

SweepRow run_one(const nlohmann::json& base, double ratio, const std::string& dir) {
  SweepRow row;
  row.ratio = ratio;
  try {
    nlohmann::json doc = base;
    doc["train"]["proxy_ratio"] = ratio;
    const RunConfig cfg = RunConfig::from_json(doc);
    const TrainArtifacts artifacts = run_training(cfg, dir);
    row.num_proxies = artifacts.result.proxies.count();
    row.recall_at_1 = artifacts.final_recall_at_1;
    row.nmi = artifacts.final_nmi;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

void run(const SweepOptions& opts) {
  nlohmann::json base = read_json_file(opts.config_path);
  for (const std::string& assignment : opts.overrides) {
    apply_override(base, assignment);
  }

  const std::string dir = resolve_output_dir(opts.out);
  ensure_directory(dir);

  std::vector<SweepRow> rows(opts.ratios.size());
  if (opts.parallel) {
    std::vector<std::future<SweepRow>> futures;
    futures.reserve(opts.ratios.size());
    for (double ratio : opts.ratios) {
      futures.push_back(std::async(std::launch::async, run_one, std::cref(base), ratio,
                                   dir + "/ratio_" + format_ratio(ratio)));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < opts.ratios.size(); ++i) {
      rows[i] = run_one(base, opts.ratios[i], dir + "/ratio_" + format_ratio(opts.ratios[i]));
    }
  }

  std::ostringstream csv;
  csv << "ratio,num_proxies,final_recall@1,final_nmi,status\n";
  for (const SweepRow& row : rows) {
    csv << format_ratio(row.ratio) << ',';
    if (row.status == "ok") csv << row.num_proxies;
    csv << ',' << csv_cell(row.recall_at_1) << ',' << csv_cell(row.nmi) << ',';
    // Commas inside an error message would break the row; quote the field.
    if (row.status.find(',') != std::string::npos) {
      csv << '"' << row.status << '"';
    } else {
      csv << row.status;
    }
    csv << '\n';
  }

  write_text_file(dir + "/sweep.csv", csv.str());
  std::cout << csv.str();
}

}  // namespace

void register_sweep_proxy_ratio(CLI::App& app) {
  auto opts = std::make_shared<SweepOptions>();
  CLI::App* cmd = app.add_subcommand(
      "sweep-proxy-ratio", "Train once per proxy ratio and tabulate final metrics");
  cmd->add_option("-c,--config", opts->config_path, "Run config JSON")->required();
  cmd->add_option("--ratios", opts->ratios, "Proxy-per-label ratios to sweep")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", opts->overrides,
                  "Override a config field in every run, e.g. --set train.steps=500");
  cmd->add_option("-o,--out", opts->out,
                  "Output directory (default $PDML_OUTPUT_ROOT or .)");
  cmd->add_flag("--parallel", opts->parallel, "Run the ratios concurrently");
  cmd->callback([opts] { run(*opts); });
}

}  // namespace pdml::tools
