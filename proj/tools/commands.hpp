#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdml/config.hpp"
#include "pdml/dataset.hpp"
#include "pdml/errors.hpp"
#include "pdml/trainer.hpp"

namespace pdml::tools {

void register_gen_data(CLI::App& app);
void register_train(CLI::App& app);
void register_eval(CLI::App& app);
void register_verify_bounds(CLI::App& app, int& exit_code);
void register_sweep_proxy_ratio(CLI::App& app);
void register_compare(CLI::App& app);

/** Output directory: the flag when given, else $PDML_OUTPUT_ROOT, else ".". */
inline std::string resolve_output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv("PDML_OUTPUT_ROOT")) return root;
  return ".";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

struct DataSplit {
  Dataset train;
  Dataset eval;
};

/** Loads the dataset and, when a split file is configured, carves it into the
 *  zero-shot train/eval halves. Without a split both halves are the full set. */
DataSplit load_data(const DataConfig& cfg);

/** One dataset per --side flag: the full file, or one half of the split. */
Dataset load_side(const std::string& csv_path, const std::string& split_path,
                  const std::string& side);

struct TrainArtifacts {
  TrainResult result;
  std::optional<double> final_recall_at_1;
  std::optional<double> final_nmi;
};

/** Runs one training per the config, writing config.json, metrics.jsonl,
 *  per-eval checkpoints, and the final checkpoint into out_dir. */
TrainArtifacts run_training(const RunConfig& cfg, const std::string& out_dir);

}  // namespace pdml::tools
