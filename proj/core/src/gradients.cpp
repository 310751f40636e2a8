#include "qmllab/gradients.hpp"

#include <cmath>
#include <string>

#include "qmllab/errors.hpp"

namespace qml {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

double activate_derivative(Activation act, double z) {
  switch (act) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;  // subgradient 0 at 0
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

namespace {

std::vector<double> affine(const DenseLayer& layer, std::span<const double> input) {
  if (static_cast<int>(input.size()) != layer.in_dim) {
    throw ShapeError("dense layer expects " + std::to_string(layer.in_dim) +
                     " inputs, got " + std::to_string(input.size()));
  }
  if (static_cast<int>(layer.bias.size()) != layer.out_dim ||
      static_cast<int>(layer.weights.size()) != layer.out_dim * layer.in_dim) {
    throw ShapeError("dense layer weight/bias shapes inconsistent");
  }
  std::vector<double> z(layer.bias.begin(), layer.bias.end());
  for (int o = 0; o < layer.out_dim; ++o) {
    const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
    double acc = z[static_cast<std::size_t>(o)];
    for (int i = 0; i < layer.in_dim; ++i) acc += row[i] * input[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(o)] = acc;
  }
  return z;
}

}  // namespace

std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> input, GradTape& tape) {
  std::vector<double> z = affine(layer, input);
  tape.records.push_back({std::vector<double>(input.begin(), input.end()), z});
  for (double& v : z) v = activate(layer.activation, v);
  return z;
}

std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> input) {
  std::vector<double> z = affine(layer, input);
  for (double& v : z) v = activate(layer.activation, v);
  return z;
}

DenseGrads dense_backward(const DenseLayer& layer,
                          std::span<const double> upstream, GradTape& tape) {
  if (tape.empty()) {
    throw StateError("dense_backward called with an empty tape");
  }
  GradTape::Record record = std::move(tape.records.back());
  tape.records.pop_back();
  if (static_cast<int>(record.input.size()) != layer.in_dim ||
      static_cast<int>(record.preact.size()) != layer.out_dim) {
    throw StateError("tape record does not match this layer's shape");
  }
  if (static_cast<int>(upstream.size()) != layer.out_dim) {
    throw ShapeError("upstream gradient has wrong length");
  }

  std::vector<double> delta(static_cast<std::size_t>(layer.out_dim));
  for (int o = 0; o < layer.out_dim; ++o) {
    delta[static_cast<std::size_t>(o)] =
        upstream[static_cast<std::size_t>(o)] *
        activate_derivative(layer.activation, record.preact[static_cast<std::size_t>(o)]);
  }

  DenseGrads grads;
  grads.weight_grad.resize(layer.weights.size());
  grads.bias_grad = delta;
  grads.input_grad.assign(static_cast<std::size_t>(layer.in_dim), 0.0);
  for (int o = 0; o < layer.out_dim; ++o) {
    const double d = delta[static_cast<std::size_t>(o)];
    const std::size_t row = static_cast<std::size_t>(o) * layer.in_dim;
    const double* w = layer.weights.data() + row;
    double* wg = grads.weight_grad.data() + row;
    for (int i = 0; i < layer.in_dim; ++i) {
      wg[i] = d * record.input[static_cast<std::size_t>(i)];
      grads.input_grad[static_cast<std::size_t>(i)] += d * w[i];
    }
  }
  return grads;
}

namespace {

void check_shift_supported(const Circuit& circuit) {
  for (const Gate& g : circuit.gates) {
    if (g.param.kind == GateParam::Kind::Ref && !is_rotation(g.kind)) {
      throw UnsupportedGateError(std::string("parameter-shift rule does not "
                                             "support a parametrized ") +
                                 gate_name(g.kind) + " gate");
    }
  }
}

void check_param_count(const Circuit& circuit, std::span<const double> params) {
  if (static_cast<int>(params.size()) != circuit.num_params) {
    throw ParamBindingError("expected " + std::to_string(circuit.num_params) +
                            " params, got " + std::to_string(params.size()));
  }
}

}  // namespace

std::vector<std::vector<double>> param_shift_jacobian(
    const Circuit& circuit, std::span<const Observable> observables,
    std::span<const double> params, const Statevector& input,
    std::span<const int> param_indices, double shift) {
  check_shift_supported(circuit);
  check_param_count(circuit, params);

  std::vector<std::vector<double>> jac(
      observables.size(), std::vector<double>(param_indices.size(), 0.0));
  std::vector<double> shifted(params.begin(), params.end());
  for (std::size_t col = 0; col < param_indices.size(); ++col) {
    const int k = param_indices[col];
    if (k < 0 || k >= circuit.num_params) {
      throw ParamBindingError("shift index " + std::to_string(k) +
                              " outside the circuit's parameter space");
    }
    const double original = shifted[static_cast<std::size_t>(k)];
    shifted[static_cast<std::size_t>(k)] = original + shift;
    const Statevector plus = run(circuit, shifted, input);
    shifted[static_cast<std::size_t>(k)] = original - shift;
    const Statevector minus = run(circuit, shifted, input);
    shifted[static_cast<std::size_t>(k)] = original;
    for (std::size_t row = 0; row < observables.size(); ++row) {
      jac[row][col] =
          0.5 * (expectation(plus, observables[row]) - expectation(minus, observables[row]));
    }
  }
  return jac;
}

std::vector<double> param_shift_grad(const Circuit& circuit,
                                     const Observable& obs,
                                     std::span<const double> params,
                                     const Statevector& input) {
  std::vector<int> all(static_cast<std::size_t>(circuit.num_params));
  for (int k = 0; k < circuit.num_params; ++k) all[static_cast<std::size_t>(k)] = k;
  const Observable observables[] = {obs};
  auto jac = param_shift_jacobian(circuit, observables, params, input, all);
  return jac.empty() ? std::vector<double>{} : std::move(jac.front());
}

std::vector<double> finite_diff_grad(const Circuit& circuit,
                                     const Observable& obs,
                                     std::span<const double> params,
                                     const Statevector& input, double epsilon) {
  if (epsilon <= 0.0) {
    throw InputError("finite-difference epsilon must be positive");
  }
  check_param_count(circuit, params);
  std::vector<double> grad(params.size());
  std::vector<double> shifted(params.begin(), params.end());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double original = shifted[k];
    shifted[k] = original + epsilon;
    const double plus = expectation(run(circuit, shifted, input), obs);
    shifted[k] = original - epsilon;
    const double minus = expectation(run(circuit, shifted, input), obs);
    shifted[k] = original;
    grad[k] = (plus - minus) / (2.0 * epsilon);
  }
  return grad;
}

std::vector<double> hybrid_input_grad(const Circuit& circuit,
                                      const Observable& obs,
                                      std::span<const double> theta,
                                      std::span<const double> encoded_input_angles) {
  const std::size_t num_features = encoded_input_angles.size();
  if (static_cast<int>(num_features + theta.size()) != circuit.num_params) {
    throw ParamBindingError(
        "circuit params must equal encoding angles plus theta (" +
        std::to_string(num_features) + " + " + std::to_string(theta.size()) +
        " != " + std::to_string(circuit.num_params) + ")");
  }
  for (const Gate& g : circuit.gates) {
    if (g.param.kind == GateParam::Kind::Ref &&
        g.param.index < static_cast<int>(num_features) && !is_rotation(g.kind)) {
      throw UnsupportedGateError(
          std::string("feature encoded by a non-rotation ") + gate_name(g.kind) +
          " gate");
    }
  }
  std::vector<double> full(encoded_input_angles.begin(), encoded_input_angles.end());
  full.insert(full.end(), theta.begin(), theta.end());
  std::vector<int> feature_indices(num_features);
  for (std::size_t i = 0; i < num_features; ++i) feature_indices[i] = static_cast<int>(i);
  const Observable observables[] = {obs};
  auto jac = param_shift_jacobian(circuit, observables, full,
                                  init_state(circuit.num_qubits), feature_indices);
  return jac.empty() ? std::vector<double>{} : std::move(jac.front());
}

}  // namespace qml
