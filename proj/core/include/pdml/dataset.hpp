#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdml/matrix.hpp"

namespace pdml {

/**
 * A labeled point set. Labels are contiguous ids 0..num_classes-1;
 * class_names maps each id back to the label value it had in the source.
 */
struct Dataset {
  Matrix points;                          // size() x dim()
  std::vector<int> labels;                // one id per row
  std::size_t num_classes = 0;
  std::vector<long long> class_names;     // id -> original label value
  std::string name;

  std::size_t size() const { return points.rows; }
  std::size_t dim() const { return points.cols; }

  /** Point indices grouped by class id. */
  std::vector<std::vector<std::size_t>> indices_by_class() const;
};

/** Gaussian blobs: class centers uniform in [-center_scale, center_scale]^dim,
 *  points sampled around their center with isotropic stddev. */
struct SynthConfig {
  std::size_t num_classes = 16;
  std::size_t per_class = 50;
  std::size_t dim = 32;
  double center_scale = 10.0;
  double stddev = 0.5;
  std::uint64_t seed = 0;
};

struct SplitSpec {
  double train_fraction = 0.5;
  bool ordered = false;       // take the lowest class ids instead of shuffling
  std::uint64_t seed = 0;
};

/** Disjoint class-id partition for zero-shot evaluation. */
struct ZeroShotSplit {
  std::vector<int> train_class_ids;
  std::vector<int> test_class_ids;
};

Dataset generate_synthetic(const SynthConfig& cfg);

/** Reads `label,v1,...,vD` rows (no header). Labels are remapped to contiguous
 *  ids in order of first appearance. */
Dataset load_csv(const std::string& path);

/** Writes rows in the same format, using the original label values. */
void save_csv(const Dataset& ds, const std::string& path);

/** Splits class ids into train/test by train_fraction (over classes). */
ZeroShotSplit split_zero_shot(const Dataset& ds, const SplitSpec& spec);

/** Points of the given classes, with labels re-mapped to contiguous local ids
 *  in ascending order of the source id. class_names carries the original
 *  label values through. */
Dataset subset_by_classes(const Dataset& ds, const std::vector<int>& class_ids,
                          const std::string& name);

ZeroShotSplit load_split(const std::string& path);
void save_split(const ZeroShotSplit& split, const std::string& path);

}  // namespace pdml
