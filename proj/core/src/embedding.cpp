#include "pdml/embedding.hpp"

#include <cmath>

#include "pdml/errors.hpp"
#include "pdml/rng.hpp"

namespace pdml {

std::size_t EmbeddingModel::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers) {
    n += layer.weight.data.size() + layer.bias.size();
  }
  return n;
}

EmbeddingModel init_model(std::size_t input_dim, const std::vector<LayerSpec>& specs,
                          std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("init_model: input_dim must be positive");
  if (specs.empty()) throw ConfigError("init_model: at least one layer required");

  Rng rng(seed);
  EmbeddingModel model;
  std::size_t in_dim = input_dim;
  for (const LayerSpec& spec : specs) {
    if (spec.dim == 0) throw ConfigError("init_model: layer dim must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.weight = Matrix(spec.dim, in_dim);
    for (double& w : layer.weight.data) w = dist(rng);
    layer.bias.resize(spec.dim);
    for (double& b : layer.bias) b = dist(rng);
    layer.activation = spec.activation;
    model.layers.push_back(std::move(layer));
    in_dim = spec.dim;
  }
  return model;
}

namespace {

void affine(const Layer& layer, std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.out_dim(), 0.0);
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    double s = layer.bias[i];
    const auto w = layer.weight.row(i);
    for (std::size_t j = 0; j < layer.in_dim(); ++j) s += w[j] * in[j];
    out[i] = s;
  }
}

void activate(Activation act, const std::vector<double>& pre, std::vector<double>& post) {
  post = pre;
  if (act == Activation::rectifier) {
    for (double& v : post) v = v > 0.0 ? v : 0.0;
  }
}

}  // namespace

std::vector<double> embed(const EmbeddingModel& model, std::span<const double> x,
                          ForwardCache& cache) {
  if (x.size() != model.input_dim()) {
    throw UsageError("embed: input dim " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim()));
  }
  cache.input.assign(x.begin(), x.end());
  cache.pre.resize(model.layers.size());
  cache.post.resize(model.layers.size());

  std::span<const double> current = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    affine(model.layers[l], current, cache.pre[l]);
    activate(model.layers[l].activation, cache.pre[l], cache.post[l]);
    current = cache.post[l];
  }
  return cache.post.back();
}

std::vector<double> embed(const EmbeddingModel& model, std::span<const double> x) {
  ForwardCache cache;
  return embed(model, x, cache);
}

Matrix embed_all(const EmbeddingModel& model, const Matrix& points) {
  Matrix out(points.rows, model.embed_dim());
  ForwardCache cache;
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto e = embed(model, points.row(i), cache);
    out.set_row(i, e);
  }
  return out;
}

void ModelGradient::scale(double s) {
  for (Matrix& w : weight) {
    for (double& v : w.data) v *= s;
  }
  for (auto& b : bias) {
    for (double& v : b) v *= s;
  }
  for (double& v : input) v *= s;
}

ModelGradient zero_gradient(const EmbeddingModel& model) {
  ModelGradient g;
  for (const Layer& layer : model.layers) {
    g.weight.emplace_back(layer.out_dim(), layer.in_dim());
    g.bias.emplace_back(layer.out_dim(), 0.0);
  }
  g.input.assign(model.input_dim(), 0.0);
  return g;
}

void embed_backward(const EmbeddingModel& model, const ForwardCache& cache,
                    std::span<const double> grad_embedding, ModelGradient& into) {
  if (grad_embedding.size() != model.embed_dim()) {
    throw UsageError("embed_backward: gradient dim mismatch");
  }

  std::vector<double> grad_post(grad_embedding.begin(), grad_embedding.end());
  std::vector<double> grad_pre;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Layer& layer = model.layers[l];

    grad_pre = grad_post;
    if (layer.activation == Activation::rectifier) {
      // Subgradient 0 at exactly 0.
      for (std::size_t i = 0; i < grad_pre.size(); ++i) {
        if (cache.pre[l][i] <= 0.0) grad_pre[i] = 0.0;
      }
    }

    const std::span<const double> layer_in =
        l == 0 ? std::span<const double>(cache.input) : std::span<const double>(cache.post[l - 1]);

    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      into.bias[l][i] += grad_pre[i];
      auto gw = into.weight[l].row(i);
      for (std::size_t j = 0; j < layer.in_dim(); ++j) gw[j] += grad_pre[i] * layer_in[j];
    }

    grad_post.assign(layer.in_dim(), 0.0);
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      const auto w = layer.weight.row(i);
      for (std::size_t j = 0; j < layer.in_dim(); ++j) grad_post[j] += grad_pre[i] * w[j];
    }
  }
  for (std::size_t j = 0; j < grad_post.size(); ++j) into.input[j] += grad_post[j];
}

std::vector<double> rescale_to_norm(std::span<const double> v, double target_norm) {
  if (!(target_norm > 0.0)) {
    throw UsageError("rescale_to_norm: target norm must be positive");
  }
  const double n = norm(v);
  if (n == 0.0) throw UsageError("rescale_to_norm: zero vector");
  std::vector<double> out(v.begin(), v.end());
  const double s = target_norm / n;
  for (double& x : out) x *= s;
  return out;
}

void rescale_rows_to_norm(Matrix& m, double target_norm) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto scaled = rescale_to_norm(m.row(i), target_norm);
    m.set_row(i, scaled);
  }
}

UnitizeResult unitize(std::span<const double> v) {
  UnitizeResult r;
  r.norm = norm(v);
  if (r.norm == 0.0) throw NumericError("unitize: zero vector");
  r.unit.assign(v.begin(), v.end());
  for (double& x : r.unit) x /= r.norm;
  return r;
}

std::vector<double> unitize_backward(const UnitizeResult& u,
                                     std::span<const double> grad_unit) {
  const double proj = dot(u.unit, grad_unit);
  std::vector<double> g(grad_unit.begin(), grad_unit.end());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - proj * u.unit[i]) / u.norm;
  return g;
}

}  // namespace pdml
