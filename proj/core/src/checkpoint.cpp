#include "pdml/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pdml/config.hpp"
#include "pdml/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace pdml {

namespace {

constexpr char kMagic[8] = {'P', 'D', 'M', 'L', 'C', 'K', 'P', '1'};

void append_doubles(std::ofstream& out, const std::vector<double>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& values, const std::string& path) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
    throw ParseError("truncated checkpoint payload: " + path);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["format"] = "pdml-checkpoint";
  header["version"] = 1;
  header["input_dim"] = ckpt.model.input_dim();
  header["embed_dim"] = ckpt.model.embed_dim();
  header["parameter_count"] =
      ckpt.model.parameter_count() + ckpt.proxies.vectors.data.size();
  header["seed"] = ckpt.seed;

  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : ckpt.model.layers) {
    layers.push_back({{"in", layer.in_dim()},
                      {"out", layer.out_dim()},
                      {"activation", to_string(layer.activation)}});
  }
  header["layers"] = std::move(layers);

  nlohmann::json proxies;
  proxies["count"] = ckpt.proxies.count();
  proxies["dim"] = ckpt.proxies.dim();
  proxies["mode"] = to_string(ckpt.proxies.mode);
  proxies["ratio"] = ckpt.proxies.proxy_per_class_ratio;
  if (!ckpt.proxies.label_to_proxy.empty()) {
    proxies["label_to_proxy"] = ckpt.proxies.label_to_proxy;
  }
  header["proxies"] = std::move(proxies);
  header["config"] = ckpt.config_echo;

  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open checkpoint file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const Layer& layer : ckpt.model.layers) {
    append_doubles(out, layer.weight.data);
    append_doubles(out, layer.bias);
  }
  append_doubles(out, ckpt.proxies.vectors.data);
  if (!out) throw ParseError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint file: " + path);

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic): " + path);
  }

  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (in.gcount() != sizeof(header_len) || header_len == 0 || header_len > (1u << 26)) {
    throw ParseError("corrupt checkpoint header length: " + path);
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    throw ParseError("truncated checkpoint header: " + path);
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("corrupt checkpoint header JSON in " + path + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    if (header.at("format").get<std::string>() != "pdml-checkpoint") {
      throw ParseError("unrecognized checkpoint format in " + path);
    }
    ckpt.seed = header.value("seed", std::uint64_t{0});

    for (const auto& spec : header.at("layers")) {
      Layer layer;
      layer.weight = Matrix(spec.at("out").get<std::size_t>(), spec.at("in").get<std::size_t>());
      layer.bias.resize(layer.out_dim());
      layer.activation = activation_from_string(spec.at("activation").get<std::string>());
      ckpt.model.layers.push_back(std::move(layer));
    }
    if (ckpt.model.layers.empty()) {
      throw ParseError("checkpoint has no layers: " + path);
    }

    const auto& proxies = header.at("proxies");
    ckpt.proxies.vectors =
        Matrix(proxies.at("count").get<std::size_t>(), proxies.at("dim").get<std::size_t>());
    ckpt.proxies.mode = assignment_from_string(proxies.at("mode").get<std::string>());
    ckpt.proxies.proxy_per_class_ratio = proxies.value("ratio", 1.0);
    if (proxies.contains("label_to_proxy")) {
      ckpt.proxies.label_to_proxy = proxies.at("label_to_proxy").get<std::vector<int>>();
    }
    ckpt.config_echo = header.value("config", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid checkpoint header in " + path + ": " + e.what());
  }

  for (Layer& layer : ckpt.model.layers) {
    read_doubles(in, layer.weight.data, path);
    read_doubles(in, layer.bias, path);
  }
  read_doubles(in, ckpt.proxies.vectors.data, path);

  const std::size_t expected =
      header.value("parameter_count",
                   ckpt.model.parameter_count() + ckpt.proxies.vectors.data.size());
  if (expected != ckpt.model.parameter_count() + ckpt.proxies.vectors.data.size()) {
    throw ParseError("checkpoint parameter count mismatch: " + path);
  }
  return ckpt;
}

}  // namespace pdml
