#include "qmllab/optim.hpp"

#include <cmath>
#include <string>

#include "qmllab/errors.hpp"

namespace qml {

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              std::size_t num_params) {
  OptimizerState state;
  state.kind = kind;
  state.learning_rate = learning_rate;
  if (kind == OptimizerKind::Adam) {
    state.m.assign(num_params, 0.0);
    state.v.assign(num_params, 0.0);
  }
  return state;
}

void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer_step: " + std::to_string(params.size()) +
                     " params vs " + std::to_string(grads.size()) + " grads");
  }
  if (state.kind == OptimizerKind::SGD) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= state.learning_rate * grads[i];
    }
    return;
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("Adam state sized for " + std::to_string(state.m.size()) +
                     " params, got " + std::to_string(params.size()));
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace qml
