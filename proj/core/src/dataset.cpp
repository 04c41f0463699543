#include "pdml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pdml/errors.hpp"
#include "pdml/rng.hpp"

namespace pdml {

std::vector<std::vector<std::size_t>> Dataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return by_class;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  if (cfg.num_classes == 0 || cfg.per_class == 0 || cfg.dim == 0) {
    throw ConfigError("generate_synthetic: classes, per_class, and dim must be positive");
  }
  if (cfg.stddev < 0.0) {
    throw ConfigError("generate_synthetic: stddev must be nonnegative");
  }

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> center_dist(-cfg.center_scale, cfg.center_scale);
  std::normal_distribution<double> noise(0.0, 1.0);

  Matrix centers(cfg.num_classes, cfg.dim);
  for (double& v : centers.data) v = center_dist(rng);

  Dataset ds;
  ds.points = Matrix(cfg.num_classes * cfg.per_class, cfg.dim);
  ds.labels.resize(ds.points.rows);
  ds.num_classes = cfg.num_classes;
  ds.class_names.resize(cfg.num_classes);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    ds.class_names[c] = static_cast<long long>(c);
  }
  ds.name = "synthetic";

  std::size_t row = 0;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    for (std::size_t i = 0; i < cfg.per_class; ++i, ++row) {
      ds.labels[row] = static_cast<int>(c);
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        ds.points(row, j) = centers(c, j) + cfg.stddev * noise(rng);
      }
    }
  }
  return ds;
}

namespace {

double parse_field(const std::string& field, std::size_t line_no, const char* what) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric " + what +
                     " '" + field + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": non-finite " + what);
  }
  return value;
}

long long parse_label(const std::string& field, std::size_t line_no) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  long long value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": non-integer label '" +
                     field + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  std::vector<long long> raw_labels;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected `label,v1,...`, got " +
                       std::to_string(fields.size()) + " field(s)");
    }
    if (dim == 0) {
      dim = fields.size() - 1;
    } else if (fields.size() - 1 != dim) {
      throw ParseError("line " + std::to_string(line_no) + ": ragged row (" +
                       std::to_string(fields.size() - 1) + " values, expected " +
                       std::to_string(dim) + ")");
    }
    raw_labels.push_back(parse_label(fields[0], line_no));
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = parse_field(fields[j + 1], line_no, "value");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty dataset file: " + path);

  // Remap labels to contiguous ids in order of first appearance.
  std::map<long long, int> remap;
  std::vector<long long> names;
  for (long long l : raw_labels) {
    if (remap.emplace(l, static_cast<int>(names.size())).second) names.push_back(l);
  }

  Dataset ds;
  ds.points = Matrix(rows.size(), dim);
  ds.labels.resize(rows.size());
  ds.num_classes = names.size();
  ds.class_names = std::move(names);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.labels[i] = remap.at(raw_labels[i]);
    ds.points.set_row(i, rows[i]);
  }
  ds.name = path;
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    const auto row = ds.points.row(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ',' << row[j];
    out << '\n';
  }
  if (!out) throw ParseError("failed writing dataset file: " + path);
}

ZeroShotSplit split_zero_shot(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0)) {
    throw ConfigError("split_zero_shot: train_fraction must lie strictly in (0,1)");
  }
  const std::size_t k = ds.num_classes;
  const auto train_count =
      static_cast<std::size_t>(std::floor(static_cast<double>(k) * spec.train_fraction));
  if (train_count == 0 || train_count >= k) {
    throw ConfigError("split_zero_shot: split leaves one side empty (" +
                      std::to_string(train_count) + " of " + std::to_string(k) +
                      " classes on the train side)");
  }

  std::vector<int> ids(k);
  for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<int>(i);
  if (!spec.ordered) {
    Rng rng(spec.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
  }

  ZeroShotSplit split;
  split.train_class_ids.assign(ids.begin(), ids.begin() + static_cast<long>(train_count));
  split.test_class_ids.assign(ids.begin() + static_cast<long>(train_count), ids.end());
  std::sort(split.train_class_ids.begin(), split.train_class_ids.end());
  std::sort(split.test_class_ids.begin(), split.test_class_ids.end());
  return split;
}

Dataset subset_by_classes(const Dataset& ds, const std::vector<int>& class_ids,
                          const std::string& name) {
  std::vector<int> sorted = class_ids;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty()) throw UsageError("subset_by_classes: empty class list");

  std::map<int, int> local;
  for (int id : sorted) {
    if (id < 0 || static_cast<std::size_t>(id) >= ds.num_classes) {
      throw UsageError("subset_by_classes: class id " + std::to_string(id) +
                       " out of range");
    }
    local[id] = static_cast<int>(local.size());
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (local.count(ds.labels[i])) keep.push_back(i);
  }

  Dataset out;
  out.points = Matrix(keep.size(), ds.dim());
  out.labels.resize(keep.size());
  out.num_classes = sorted.size();
  out.class_names.resize(sorted.size());
  for (const auto& [global, loc] : local) {
    out.class_names[static_cast<std::size_t>(loc)] =
        ds.class_names[static_cast<std::size_t>(global)];
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.points.set_row(i, ds.points.row(keep[i]));
    out.labels[i] = local.at(ds.labels[keep[i]]);
  }
  out.name = name;
  return out;
}

ZeroShotSplit load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open split file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid split JSON in " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("train_class_ids") || !j.contains("test_class_ids")) {
    throw ParseError("split file " + path +
                     " must contain train_class_ids and test_class_ids");
  }
  ZeroShotSplit split;
  try {
    split.train_class_ids = j.at("train_class_ids").get<std::vector<int>>();
    split.test_class_ids = j.at("test_class_ids").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid split JSON in " + path + ": " + e.what());
  }
  return split;
}

void save_split(const ZeroShotSplit& split, const std::string& path) {
  nlohmann::json j;
  j["train_class_ids"] = split.train_class_ids;
  j["test_class_ids"] = split.test_class_ids;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pdml
