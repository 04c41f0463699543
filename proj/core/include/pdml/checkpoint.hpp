#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "pdml/embedding.hpp"
#include "pdml/proxies.hpp"

namespace pdml {

/**
 * Model + proxies + the materialized config of the run that produced them.
 * On disk: an 8-byte magic, a little-endian uint64 header length, a JSON
 * header (shapes, activations, proxy metadata, seed provenance), then all
 * parameters as little-endian float64: each layer's weights row-major
 * followed by its bias, then the proxy vectors row-major.
 */
struct Checkpoint {
  EmbeddingModel model;
  ProxySet proxies;
  nlohmann::json config_echo;  // null when the producer had no config
  std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pdml
