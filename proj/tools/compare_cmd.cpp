#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <vector>

#include "commands.hpp"
#include "pdml/metrics.hpp"

namespace pdml::tools {

namespace {

struct CompareOptions {
  std::vector<std::string> files;
  double threshold = 0.8;
  bool json = false;
};

struct FileSummary {
  std::string path;
  std::optional<std::size_t> first_step;  // first eval with recall@1 >= threshold
  double final_recall = 0.0;
};

FileSummary summarize(const std::string& path, double threshold) {
  FileSummary summary;
  summary.path = path;

  bool any_recall = false;
  for (const MetricsRecord& record : load_metrics(path)) {
    if (!record.recall_at_k) continue;
    const auto it = record.recall_at_k->find(1);
    if (it == record.recall_at_k->end()) continue;
    any_recall = true;
    summary.final_recall = it->second;
    if (!summary.first_step && it->second >= threshold) {
      summary.first_step = record.step;
    }
  }
  if (!any_recall) {
    throw ConfigError("no recall@1 records in " + path);
  }
  return summary;
}

void run(const CompareOptions& opts) {
  if (opts.files.size() < 2) {
    throw ConfigError("compare needs at least 2 metrics files");
  }

  std::vector<FileSummary> summaries;
  summaries.reserve(opts.files.size());
  for (const std::string& path : opts.files) {
    summaries.push_back(summarize(path, opts.threshold));
  }

  if (opts.json) {
    nlohmann::json out;
    out["threshold"] = opts.threshold;
    out["files"] = nlohmann::json::array();
    for (const FileSummary& s : summaries) {
      nlohmann::json f;
      f["file"] = s.path;
      f["first_step"] = s.first_step ? nlohmann::json(*s.first_step) : nlohmann::json();
      f["final_recall_at_1"] = s.final_recall;
      out["files"].push_back(f);
    }
    out["speedups"] = nlohmann::json::array();
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      for (std::size_t j = i + 1; j < summaries.size(); ++j) {
        nlohmann::json s;
        s["faster"] = summaries[i].path;
        s["against"] = summaries[j].path;
        if (summaries[i].first_step && summaries[j].first_step) {
          s["ratio"] = static_cast<double>(*summaries[j].first_step) /
                       static_cast<double>(*summaries[i].first_step);
        } else {
          s["ratio"] = nlohmann::json();
        }
        out["speedups"].push_back(s);
      }
    }
    std::cout << out.dump(2) << "\n";
    return;
  }

  std::printf("%-48s %16s %16s\n", "file", "first_step", "final_recall@1");
  for (const FileSummary& s : summaries) {
    if (s.first_step) {
      std::printf("%-48s %16zu %16.6f\n", s.path.c_str(), *s.first_step, s.final_recall);
    } else {
      std::printf("%-48s %16s %16.6f\n", s.path.c_str(), "∞", s.final_recall);
    }
  }
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    for (std::size_t j = i + 1; j < summaries.size(); ++j) {
      if (summaries[i].first_step && summaries[j].first_step) {
        std::printf("speedup %s over %s: %.6f\n", summaries[i].path.c_str(),
                    summaries[j].path.c_str(),
                    static_cast<double>(*summaries[j].first_step) /
                        static_cast<double>(*summaries[i].first_step));
      } else {
        std::printf("speedup %s over %s: -\n", summaries[i].path.c_str(),
                    summaries[j].path.c_str());
      }
    }
  }
}

}  // namespace

void register_compare(CLI::App& app) {
  auto opts = std::make_shared<CompareOptions>();
  CLI::App* cmd = app.add_subcommand(
      "compare", "Steps-to-threshold comparison across metrics files");
  cmd->add_option("files", opts->files, "Metrics JSONL files")->required();
  cmd->add_option("--threshold", opts->threshold, "recall@1 convergence threshold")
      ->capture_default_str();
  cmd->add_flag("--json", opts->json, "Emit JSON instead of a table");
  cmd->callback([opts] { run(*opts); });
}

}  // namespace pdml::tools
