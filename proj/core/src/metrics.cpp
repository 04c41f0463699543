#include "pdml/metrics.hpp"

#include <limits>

#include "pdml/errors.hpp"

namespace pdml {

nlohmann::json MetricsRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  if (loss) j["loss"] = *loss;
  if (learning_rate) j["learning_rate"] = *learning_rate;
  if (recall_at_k) {
    nlohmann::json r = nlohmann::json::object();
    for (const auto& [k, v] : *recall_at_k) r[std::to_string(k)] = v;
    j["recall_at_k"] = std::move(r);
  }
  if (nmi) j["nmi"] = *nmi;
  if (epsilon) j["epsilon"] = *epsilon;
  j["wall_clock_ms"] = wall_clock_ms;
  return j;
}

MetricsRecord MetricsRecord::from_json(const nlohmann::json& j) {
  MetricsRecord r;
  try {
    r.step = j.at("step").get<std::size_t>();
    if (j.contains("loss")) {
      // A non-finite loss serializes as null; read it back as NaN.
      const auto& loss = j.at("loss");
      r.loss = loss.is_null() ? std::numeric_limits<double>::quiet_NaN()
                              : loss.get<double>();
    }
    if (j.contains("learning_rate")) r.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("recall_at_k")) {
      std::map<std::size_t, double> recall;
      for (const auto& [key, value] : j.at("recall_at_k").items()) {
        recall[static_cast<std::size_t>(std::stoull(key))] = value.get<double>();
      }
      r.recall_at_k = std::move(recall);
    }
    if (j.contains("nmi")) r.nmi = j.at("nmi").get<double>();
    if (j.contains("epsilon")) r.epsilon = j.at("epsilon").get<double>();
    if (j.contains("wall_clock_ms")) r.wall_clock_ms = j.at("wall_clock_ms").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid metrics record: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("invalid metrics record: non-numeric recall key");
  }
  return r;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ParseError("cannot open metrics file: " + path);
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << record.to_json().dump() << '\n';
  out_.flush();
  if (!out_) throw ParseError("failed writing metrics record");
}

std::vector<MetricsRecord> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metrics file: " + path);
  std::vector<MetricsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(MetricsRecord::from_json(j));
  }
  return records;
}

}  // namespace pdml
