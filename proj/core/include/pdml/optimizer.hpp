#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pdml {

enum class OptimizerKind { sgd, rms_adaptive };

/** Denominator floor of the adaptive update. */
inline constexpr double kRmsEpsilon = 1e-8;

/** param -= lr * grad */
void sgd_update(std::span<double> param, std::span<const double> grad, double lr);

/**
 * Elementwise adaptive update with a running second-moment accumulator:
 *   acc   = decay * acc + (1 - decay) * grad^2
 *   param = param - lr * grad / (sqrt(acc) + 1e-8)
 */
void rms_adaptive_update(std::span<double> param, std::span<const double> grad,
                         std::span<double> acc, double lr, double decay);

/**
 * Stateful wrapper over the updates above. Each parameter group (a layer's
 * weights, a bias vector, the proxy matrix) keeps its own accumulator slot,
 * addressed by a stable group index.
 */
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double rms_decay)
      : kind_(kind), rms_decay_(rms_decay) {}

  void update(std::size_t group, std::span<double> param,
              std::span<const double> grad, double lr);

 private:
  OptimizerKind kind_;
  double rms_decay_;
  std::vector<std::vector<double>> acc_;
};

}  // namespace pdml
