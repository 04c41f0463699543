#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdml/matrix.hpp"

namespace pdml {

enum class Activation { identity, rectifier };

/** One affine layer: out = act(weight * in + bias). weight is out_dim x in_dim. */
struct Layer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

struct EmbeddingModel {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t embed_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;
};

struct LayerSpec {
  std::size_t dim = 0;
  Activation activation = Activation::identity;
};

/** Weights and biases drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]. */
EmbeddingModel init_model(std::size_t input_dim, const std::vector<LayerSpec>& specs,
                          std::uint64_t seed);

/** Per-layer intermediates kept by the forward pass for backprop. */
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;    // pre-activation per layer
  std::vector<std::vector<double>> post;   // post-activation per layer
};

std::vector<double> embed(const EmbeddingModel& model, std::span<const double> x);
std::vector<double> embed(const EmbeddingModel& model, std::span<const double> x,
                          ForwardCache& cache);
Matrix embed_all(const EmbeddingModel& model, const Matrix& points);

/** Gradients shaped like the model, plus the gradient w.r.t. the input point. */
struct ModelGradient {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
  std::vector<double> input;

  void scale(double s);
};

ModelGradient zero_gradient(const EmbeddingModel& model);

/** Backprop of grad_embedding through the cached forward pass. The rectifier
 *  uses subgradient 0 at exactly 0. Accumulates into `into`. */
void embed_backward(const EmbeddingModel& model, const ForwardCache& cache,
                    std::span<const double> grad_embedding, ModelGradient& into);

/** Scales v to the requested Euclidean norm. Zero vectors and non-positive
 *  targets are usage errors. */
std::vector<double> rescale_to_norm(std::span<const double> v, double target_norm);

/** Rescales every row of m to the target norm in place. */
void rescale_rows_to_norm(Matrix& m, double target_norm);

/** Unit-normalization with enough state to backprop through it. */
struct UnitizeResult {
  std::vector<double> unit;
  double norm = 0.0;
};

UnitizeResult unitize(std::span<const double> v);

/** Pullback of grad_unit through v -> v/|v|:  (g - (u.g) u) / |v|. */
std::vector<double> unitize_backward(const UnitizeResult& u,
                                     std::span<const double> grad_unit);

}  // namespace pdml
