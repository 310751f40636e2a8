#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qml {

enum class OptimizerKind { SGD, Adam };

// Adam defaults: beta1 0.9, beta2 0.999, eps 1e-8.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;
};

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              std::size_t num_params);

// SGD: theta -= lr * g. Adam: bias-corrected moment update.
void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    std::span<const double> grads);

}  // namespace qml
