#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace pdml {

/**
 * One metrics stream entry. Loss records carry step / loss / learning_rate;
 * eval records carry step / recall_at_k / nmi / epsilon. Unset fields are
 * omitted from the serialized form. wall_clock_ms is always present and is
 * the one field excluded from determinism comparisons.
 */
struct MetricsRecord {
  std::size_t step = 0;
  std::optional<double> loss;
  std::optional<double> learning_rate;
  std::optional<std::map<std::size_t, double>> recall_at_k;
  std::optional<double> nmi;
  std::optional<double> epsilon;
  std::int64_t wall_clock_ms = 0;

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
};

/** JSON-lines writer, one record per line, flushed per record so a crashed
 *  run keeps everything emitted before the crash. */
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);

  void write(const MetricsRecord& record);

 private:
  std::ofstream out_;
};

/** Reads a metrics JSONL file back into records. */
std::vector<MetricsRecord> load_metrics(const std::string& path);

}  // namespace pdml
