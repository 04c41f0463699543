#include "pdml/optimizer.hpp"

#include <cmath>

#include "pdml/errors.hpp"

namespace pdml {

void sgd_update(std::span<double> param, std::span<const double> grad, double lr) {
  if (param.size() != grad.size()) throw UsageError("sgd_update: shape mismatch");
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

void rms_adaptive_update(std::span<double> param, std::span<const double> grad,
                         std::span<double> acc, double lr, double decay) {
  if (param.size() != grad.size() || param.size() != acc.size()) {
    throw UsageError("rms_adaptive_update: shape mismatch");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    acc[i] = decay * acc[i] + (1.0 - decay) * grad[i] * grad[i];
    param[i] -= lr * grad[i] / (std::sqrt(acc[i]) + kRmsEpsilon);
  }
}

void Optimizer::update(std::size_t group, std::span<double> param,
                       std::span<const double> grad, double lr) {
  if (kind_ == OptimizerKind::sgd) {
    sgd_update(param, grad, lr);
    return;
  }
  if (group >= acc_.size()) acc_.resize(group + 1);
  if (acc_[group].size() != param.size()) acc_[group].assign(param.size(), 0.0);
  rms_adaptive_update(param, grad, acc_[group], lr, rms_decay_);
}

}  // namespace pdml
