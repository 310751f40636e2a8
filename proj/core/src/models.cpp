#include "qmllab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qmllab/data.hpp"
#include "qmllab/errors.hpp"
#include "qmllab/losses.hpp"
#include "qmllab/parallel.hpp"
#include "qmllab/rng.hpp"

namespace qml {

namespace {

constexpr double kPi = std::numbers::pi;

int encoding_capacity(int num_qubits) { return 2 * num_qubits; }

DenseLayer init_dense(int in_dim, int out_dim, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.activation = act;
  layer.weights.resize(static_cast<std::size_t>(in_dim) * out_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
  return layer;
}

ParamVector init_theta(std::size_t count, Rng& rng) {
  ParamVector theta(count);
  for (double& t : theta) t = rng.uniform(-kPi, kPi);
  return theta;
}

// (tanh output + 1) * pi/2 keeps encoding angles in [0, pi].
std::vector<double> squash_to_angles(std::span<const double> values) {
  std::vector<double> angles(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    angles[i] = (values[i] + 1.0) * (kPi / 2.0);
  }
  return angles;
}

void append_flat(std::vector<double>& flat, const DenseLayer& layer) {
  flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
  flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
}

std::size_t read_flat(DenseLayer& layer, std::span<const double> flat,
                      std::size_t offset) {
  for (double& w : layer.weights) w = flat[offset++];
  for (double& b : layer.bias) b = flat[offset++];
  return offset;
}

void check_flat_size(std::span<const double> flat, std::size_t expected) {
  if (flat.size() != expected) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, expected " + std::to_string(expected));
  }
}

void check_ff_batches(std::span<const std::vector<double>> positive,
                      std::span<const std::vector<double>> negative) {
  if (positive.empty() || negative.empty()) {
    throw InputError("ff_train_step needs nonempty batches");
  }
  if (positive.size() != negative.size()) {
    throw ShapeError("positive and negative batches must pair up");
  }
  const std::size_t arity = positive.front().size();
  for (const auto& v : positive) {
    if (v.size() != arity) throw ShapeError("positive batch feature arity mismatch");
  }
  for (const auto& v : negative) {
    if (v.size() != arity) throw ShapeError("negative batch feature arity mismatch");
  }
}

}  // namespace

Circuit encoding_prefix(int num_features, int num_qubits) {
  if (num_features > encoding_capacity(num_qubits)) {
    throw ShapeError(std::to_string(num_features) + " features exceed the " +
                     std::to_string(encoding_capacity(num_qubits)) +
                     "-angle capacity of " + std::to_string(num_qubits) + " qubits");
  }
  Circuit circuit;
  circuit.num_qubits = num_qubits;
  circuit.num_params = num_features;
  for (int k = 0; k < num_features; ++k) {
    const int qubit = k / 2;
    circuit.append(k % 2 == 0 ? Gate::ry_ref(qubit, k) : Gate::rz_ref(qubit, k));
  }
  return circuit;
}

Circuit encode_features(std::span<const double> features, int num_qubits) {
  if (static_cast<int>(features.size()) > encoding_capacity(num_qubits)) {
    throw ShapeError(std::to_string(features.size()) + " features exceed the " +
                     std::to_string(encoding_capacity(num_qubits)) +
                     "-angle capacity of " + std::to_string(num_qubits) + " qubits");
  }
  Circuit circuit;
  circuit.num_qubits = num_qubits;
  for (std::size_t k = 0; k < features.size(); ++k) {
    const int qubit = static_cast<int>(k) / 2;
    circuit.append(k % 2 == 0 ? Gate::ry(qubit, features[k])
                              : Gate::rz(qubit, features[k]));
  }
  return circuit;
}

int append_ansatz(Circuit& circuit, int num_qubits, int depth, int first_ref) {
  int ref = first_ref;
  for (int d = 0; d < depth; ++d) {
    for (int q = 0; q < num_qubits; ++q) {
      circuit.append(Gate::ry_ref(q, ref++));
      circuit.append(Gate::rz_ref(q, ref++));
    }
    for (int q = 0; q < num_qubits; ++q) {
      circuit.append(Gate::cnot(q, (q + 1) % num_qubits));
    }
  }
  circuit.num_params = std::max(circuit.num_params, ref);
  return ref;
}

double goodness(std::span<const double> expectations) {
  double g = 0.0;
  for (double v : expectations) {
    if (std::fabs(v) > 1.0 + 1e-6) {
      throw InputError("goodness expects expectation values in [-1, 1]");
    }
    g += v * v;
  }
  return g;
}

QuantumLayer QuantumLayer::build(int num_qubits, int depth, int num_features) {
  QuantumLayer layer;
  layer.num_qubits = num_qubits;
  layer.num_features = num_features;
  layer.circuit = encoding_prefix(num_features, num_qubits);
  const int end = append_ansatz(layer.circuit, num_qubits, depth, num_features);
  layer.theta.assign(static_cast<std::size_t>(end - num_features), 0.0);
  layer.readout.reserve(static_cast<std::size_t>(num_qubits));
  for (int q = 0; q < num_qubits; ++q) layer.readout.push_back(Observable::z(q));
  return layer;
}

std::vector<double> QuantumLayer::bind(std::span<const double> features) const {
  if (static_cast<int>(features.size()) > num_features) {
    throw ShapeError("quantum layer takes at most " + std::to_string(num_features) +
                     " features, got " + std::to_string(features.size()));
  }
  std::vector<double> full(features.begin(), features.end());
  full.resize(static_cast<std::size_t>(num_features), 0.0);
  full.insert(full.end(), theta.begin(), theta.end());
  return full;
}

std::vector<double> QuantumLayer::expectations(std::span<const double> features) const {
  const std::vector<double> full = bind(features);
  const Statevector state = run(circuit, full, init_state(num_qubits));
  std::vector<double> values(readout.size());
  for (std::size_t i = 0; i < readout.size(); ++i) {
    values[i] = expectation(state, readout[i]);
  }
  return values;
}

std::vector<std::vector<double>> QuantumLayer::theta_jacobian(
    std::span<const double> features, double shift) const {
  std::vector<int> indices(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    indices[k] = num_features + static_cast<int>(k);
  }
  return param_shift_jacobian(circuit, readout, bind(features),
                              init_state(num_qubits), indices, shift);
}

std::vector<std::vector<double>> QuantumLayer::feature_jacobian(
    std::span<const double> features, double shift) const {
  std::vector<int> indices(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) indices[k] = static_cast<int>(k);
  return param_shift_jacobian(circuit, readout, bind(features),
                              init_state(num_qubits), indices, shift);
}

int LogitModel::predict(std::span<const double> features) const {
  const std::vector<double> scores = logits(features);
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c) {
    if (scores[static_cast<std::size_t>(c)] > scores[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

using FfForward = std::pair<double, std::vector<double>>;

std::vector<double> FfModel::layer_transform(int layer,
                                             std::span<const double> input) const {
  return layer_forward(layer, input).second;
}

double FfModel::layer_goodness(int layer, std::span<const double> input) const {
  return layer_forward(layer, input).first;
}

double FfModel::total_goodness(std::span<const double> features) const {
  std::vector<double> input(features.begin(), features.end());
  double total = 0.0;
  for (int k = 0; k < num_layers(); ++k) {
    auto [g, next] = layer_forward(k, input);
    total += g;
    if (k + 1 < num_layers()) input = std::move(next);
  }
  return total;
}

int FfModel::predict(std::span<const double> features) const {
  int best = 0;
  double best_goodness = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::vector<double> overlaid = overlay_label(features, c);
    const double g = total_goodness(overlaid);
    if (c == 0 || g > best_goodness) {
      best = c;
      best_goodness = g;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// ClassicalMLP: dense stack with ReLU hidden layers and a linear readout.
// ---------------------------------------------------------------------------

class ClassicalMlpModel final : public LogitModel {
 public:
  explicit ClassicalMlpModel(const ModelSpec& spec) : LogitModel(spec) {
    Rng rng(spec.seed);
    int in_dim = kPooledFeatures;
    for (int width : spec.classical_widths) {
      layers_.push_back(init_dense(in_dim, width, Activation::ReLU, rng));
      in_dim = width;
    }
    layers_.push_back(init_dense(in_dim, spec.readout_classes, Activation::Identity, rng));
  }

  std::vector<double> logits(std::span<const double> features) const override {
    std::vector<double> h(features.begin(), features.end());
    for (const DenseLayer& layer : layers_) h = dense_forward(layer, h);
    return h;
  }

  std::pair<double, std::vector<double>> loss_and_grad(
      std::span<const double> features, int label,
      const GradOptions&) const override {
    GradTape tape;
    std::vector<double> h(features.begin(), features.end());
    for (const DenseLayer& layer : layers_) h = dense_forward(layer, h, tape);
    auto [loss, upstream] = softmax_cross_entropy(h, label);

    std::vector<DenseGrads> grads(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      grads[i] = dense_backward(layers_[i], upstream, tape);
      upstream = grads[i].input_grad;
    }
    std::vector<double> flat;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      flat.insert(flat.end(), grads[i].weight_grad.begin(), grads[i].weight_grad.end());
      flat.insert(flat.end(), grads[i].bias_grad.begin(), grads[i].bias_grad.end());
    }
    return {loss, std::move(flat)};
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat;
    for (const DenseLayer& layer : layers_) append_flat(flat, layer);
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    std::size_t offset = 0;
    for (DenseLayer& layer : layers_) offset = read_flat(layer, flat, offset);
  }

 private:
  std::vector<DenseLayer> layers_;
};

// ---------------------------------------------------------------------------
// QMLP: classical front stack -> angle squash -> ansatz -> linear readout.
// ---------------------------------------------------------------------------

class QmlpModel final : public LogitModel {
 public:
  explicit QmlpModel(const ModelSpec& spec) : LogitModel(spec) {
    Rng rng(spec.seed);
    const int capacity = encoding_capacity(spec.num_qubits);
    int in_dim = kPooledFeatures;
    for (int width : spec.classical_widths) {
      front_.push_back(init_dense(in_dim, width, Activation::ReLU, rng));
      in_dim = width;
    }
    front_.push_back(init_dense(in_dim, capacity, Activation::Tanh, rng));
    qlayer_ = QuantumLayer::build(spec.num_qubits, spec.ansatz_depth, capacity);
    qlayer_.theta = init_theta(qlayer_.theta.size(), rng);
    readout_ = init_dense(spec.num_qubits, spec.readout_classes, Activation::Identity, rng);
  }

  std::vector<double> logits(std::span<const double> features) const override {
    std::vector<double> h(features.begin(), features.end());
    for (const DenseLayer& layer : front_) h = dense_forward(layer, h);
    const std::vector<double> z = qlayer_.expectations(squash_to_angles(h));
    return dense_forward(readout_, z);
  }

  std::pair<double, std::vector<double>> loss_and_grad(
      std::span<const double> features, int label,
      const GradOptions& opts) const override {
    GradTape front_tape;
    std::vector<double> h(features.begin(), features.end());
    for (const DenseLayer& layer : front_) h = dense_forward(layer, h, front_tape);
    const std::vector<double> angles = squash_to_angles(h);
    const std::vector<double> z = qlayer_.expectations(angles);

    GradTape readout_tape;
    const std::vector<double> scores = dense_forward(readout_, z, readout_tape);
    auto [loss, dlogits] = softmax_cross_entropy(scores, label);

    const DenseGrads readout_grads = dense_backward(readout_, dlogits, readout_tape);
    const std::vector<double>& dz = readout_grads.input_grad;

    const auto theta_jac = qlayer_.theta_jacobian(angles, opts.shift);
    const auto angle_jac = qlayer_.feature_jacobian(angles, opts.shift);
    std::vector<double> theta_grad(qlayer_.theta.size(), 0.0);
    for (std::size_t j = 0; j < dz.size(); ++j) {
      for (std::size_t t = 0; t < theta_grad.size(); ++t) {
        theta_grad[t] += dz[j] * theta_jac[j][t];
      }
    }
    std::vector<double> upstream(angles.size(), 0.0);
    for (std::size_t j = 0; j < dz.size(); ++j) {
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        upstream[i] += dz[j] * angle_jac[j][i];
      }
    }
    // d(angle)/d(tanh output) = pi/2; the tanh itself lives on the tape.
    for (double& u : upstream) u *= kPi / 2.0;

    std::vector<DenseGrads> front_grads(front_.size());
    for (std::size_t i = front_.size(); i-- > 0;) {
      front_grads[i] = dense_backward(front_[i], upstream, front_tape);
      upstream = front_grads[i].input_grad;
    }

    std::vector<double> flat;
    for (std::size_t i = 0; i < front_.size(); ++i) {
      flat.insert(flat.end(), front_grads[i].weight_grad.begin(),
                  front_grads[i].weight_grad.end());
      flat.insert(flat.end(), front_grads[i].bias_grad.begin(),
                  front_grads[i].bias_grad.end());
    }
    flat.insert(flat.end(), theta_grad.begin(), theta_grad.end());
    flat.insert(flat.end(), readout_grads.weight_grad.begin(),
                readout_grads.weight_grad.end());
    flat.insert(flat.end(), readout_grads.bias_grad.begin(),
                readout_grads.bias_grad.end());
    return {loss, std::move(flat)};
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat;
    for (const DenseLayer& layer : front_) append_flat(flat, layer);
    flat.insert(flat.end(), qlayer_.theta.begin(), qlayer_.theta.end());
    append_flat(flat, readout_);
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    std::size_t offset = 0;
    for (DenseLayer& layer : front_) offset = read_flat(layer, flat, offset);
    for (double& t : qlayer_.theta) t = flat[offset++];
    read_flat(readout_, flat, offset);
  }

 private:
  std::vector<DenseLayer> front_;
  QuantumLayer qlayer_;
  DenseLayer readout_;
};

// ---------------------------------------------------------------------------
// QBP: direct angle encoding -> ansatz -> linear readout; the ansatz trains
// by parameter shift and the readout by analytic backprop, jointly.
// ---------------------------------------------------------------------------

class QbpModel final : public LogitModel {
 public:
  explicit QbpModel(const ModelSpec& spec) : LogitModel(spec) {
    Rng rng(spec.seed);
    qlayer_ = QuantumLayer::build(spec.num_qubits, spec.ansatz_depth,
                                  encoding_capacity(spec.num_qubits));
    qlayer_.theta = init_theta(qlayer_.theta.size(), rng);
    readout_ = init_dense(spec.num_qubits, spec.readout_classes, Activation::Identity, rng);
  }

  std::vector<double> logits(std::span<const double> features) const override {
    return dense_forward(readout_, qlayer_.expectations(features));
  }

  std::pair<double, std::vector<double>> loss_and_grad(
      std::span<const double> features, int label,
      const GradOptions& opts) const override {
    const std::vector<double> z = qlayer_.expectations(features);
    GradTape tape;
    const std::vector<double> scores = dense_forward(readout_, z, tape);
    auto [loss, dlogits] = softmax_cross_entropy(scores, label);
    const DenseGrads readout_grads = dense_backward(readout_, dlogits, tape);

    const auto theta_jac = qlayer_.theta_jacobian(features, opts.shift);
    std::vector<double> flat(qlayer_.theta.size(), 0.0);
    for (std::size_t j = 0; j < readout_grads.input_grad.size(); ++j) {
      for (std::size_t t = 0; t < flat.size(); ++t) {
        flat[t] += readout_grads.input_grad[j] * theta_jac[j][t];
      }
    }
    flat.insert(flat.end(), readout_grads.weight_grad.begin(),
                readout_grads.weight_grad.end());
    flat.insert(flat.end(), readout_grads.bias_grad.begin(),
                readout_grads.bias_grad.end());
    return {loss, std::move(flat)};
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat(qlayer_.theta.begin(), qlayer_.theta.end());
    append_flat(flat, readout_);
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    std::size_t offset = 0;
    for (double& t : qlayer_.theta) t = flat[offset++];
    read_flat(readout_, flat, offset);
  }

 private:
  QuantumLayer qlayer_;
  DenseLayer readout_;
};

// ---------------------------------------------------------------------------
// Baseline QNN: frozen random ansatz read out through single-Z and ring-ZZ
// expectations; only the classical head trains (post-variational style).
// ---------------------------------------------------------------------------

class BaselineQnnModel final : public LogitModel {
 public:
  explicit BaselineQnnModel(const ModelSpec& spec) : LogitModel(spec) {
    Rng rng(spec.seed);
    qlayer_ = QuantumLayer::build(spec.num_qubits, spec.ansatz_depth,
                                  encoding_capacity(spec.num_qubits));
    qlayer_.theta = init_theta(qlayer_.theta.size(), rng);  // frozen
    qlayer_.readout.clear();
    for (int q = 0; q < spec.num_qubits; ++q) {
      qlayer_.readout.push_back(Observable::z(q));
    }
    for (int q = 0; q < spec.num_qubits; ++q) {
      qlayer_.readout.push_back(Observable::zz(q, (q + 1) % spec.num_qubits));
    }
    readout_ = init_dense(2 * spec.num_qubits, spec.readout_classes,
                          Activation::Identity, rng);
  }

  std::vector<double> logits(std::span<const double> features) const override {
    return dense_forward(readout_, qlayer_.expectations(features));
  }

  std::pair<double, std::vector<double>> loss_and_grad(
      std::span<const double> features, int label,
      const GradOptions&) const override {
    const std::vector<double> z = qlayer_.expectations(features);
    GradTape tape;
    const std::vector<double> scores = dense_forward(readout_, z, tape);
    auto [loss, dlogits] = softmax_cross_entropy(scores, label);
    const DenseGrads grads = dense_backward(readout_, dlogits, tape);
    std::vector<double> flat(grads.weight_grad.begin(), grads.weight_grad.end());
    flat.insert(flat.end(), grads.bias_grad.begin(), grads.bias_grad.end());
    return {loss, std::move(flat)};
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat;
    append_flat(flat, readout_);
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    read_flat(readout_, flat, 0);
  }

 private:
  QuantumLayer qlayer_;
  DenseLayer readout_;
};

// ---------------------------------------------------------------------------
// Classical forward-forward: ReLU layers trained against the local goodness
// objective; activities are length-normalized before feeding the next layer
// so only their direction carries forward.
// ---------------------------------------------------------------------------

class ClassicalFfModel final : public FfModel {
 public:
  explicit ClassicalFfModel(const ModelSpec& spec) : FfModel(spec) {
    Rng rng(spec.seed);
    int in_dim = kPooledFeatures;
    for (int width : spec.classical_widths) {
      FfLayer layer;
      layer.dense = init_dense(in_dim, width, Activation::ReLU, rng);
      layers_.push_back(std::move(layer));
      in_dim = width;
    }
    set_optimizer(OptimizerKind::Adam);
  }

  int num_layers() const override { return static_cast<int>(layers_.size()); }

  std::size_t layer_parameter_count(int layer) const override {
    const DenseLayer& dense = layers_.at(static_cast<std::size_t>(layer)).dense;
    return dense.weights.size() + dense.bias.size();
  }

  void set_optimizer(OptimizerKind kind) override {
    for (FfLayer& layer : layers_) {
      const std::size_t n = layer.dense.weights.size() + layer.dense.bias.size();
      layer.opt = make_optimizer(kind, 0.0, n);
    }
  }

  double ff_train_step(int layer, std::span<const std::vector<double>> positive,
                       std::span<const std::vector<double>> negative,
                       double learning_rate, const GradOptions&) override {
    check_ff_batches(positive, negative);
    FfLayer& state = layers_.at(static_cast<std::size_t>(layer));
    const std::size_t n = positive.size();
    const std::size_t pcount = state.dense.weights.size() + state.dense.bias.size();

    std::vector<std::vector<double>> pair_grads(n);
    std::vector<double> pair_loss(n);
    parallel_for(n, [&](std::size_t i) {
      auto [loss, grad] = pair_gradient(state.dense, positive[i], negative[i]);
      pair_loss[i] = loss;
      pair_grads[i] = std::move(grad);
    });

    std::vector<double> grad(pcount, 0.0);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss_sum += pair_loss[i];
      for (std::size_t k = 0; k < pcount; ++k) grad[k] += pair_grads[i][k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= inv;

    std::vector<double> params;
    append_flat(params, state.dense);
    state.opt.learning_rate = learning_rate;
    optimizer_step(state.opt, params, grad);
    read_flat(state.dense, params, 0);
    return loss_sum * inv;
  }

  std::vector<double> layer_transform(int layer,
                                      std::span<const double> input) const override {
    return forward(layer, input).second;
  }

  double layer_goodness(int layer, std::span<const double> input) const override {
    return forward(layer, input).first;
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat;
    for (const FfLayer& layer : layers_) append_flat(flat, layer.dense);
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    std::size_t offset = 0;
    for (FfLayer& layer : layers_) offset = read_flat(layer.dense, flat, offset);
  }

 private:
  struct FfLayer {
    DenseLayer dense;
    OptimizerState opt;
  };

  FfForward forward(int layer, std::span<const double> input) const {
    const DenseLayer& dense = layers_.at(static_cast<std::size_t>(layer)).dense;
    std::vector<double> activity = dense_forward(dense, input);
    double g = 0.0;
    for (double a : activity) g += a * a;
    const double norm = std::sqrt(g);
    std::vector<double> next(activity.size(), 0.0);
    if (norm > 1e-12) {
      for (std::size_t i = 0; i < activity.size(); ++i) next[i] = activity[i] / norm;
    }
    return {g, std::move(next)};
  }

  void check_batches(std::span<const std::vector<double>> positive,
                     std::span<const std::vector<double>> negative) const {
    if (positive.empty() || negative.empty()) {
      throw InputError("ff_train_step needs nonempty batches");
    }
    if (positive.size() != negative.size()) {
      throw ShapeError("positive and negative batches must pair up");
    }
    const std::size_t arity = positive.front().size();
    for (const auto& v : positive) {
      if (v.size() != arity) throw ShapeError("positive batch feature arity mismatch");
    }
    for (const auto& v : negative) {
      if (v.size() != arity) throw ShapeError("negative batch feature arity mismatch");
    }
  }

  // dLoss/d(W,b) of ff_loss(g_pos, g_neg, threshold) for one sample pair.
  std::pair<double, std::vector<double>> pair_gradient(
      const DenseLayer& dense, std::span<const double> pos,
      std::span<const double> neg) const {
    GradTape tape;
    const std::vector<double> a_pos = dense_forward(dense, pos, tape);
    double g_pos = 0.0;
    for (double a : a_pos) g_pos += a * a;
    GradTape neg_tape;
    const std::vector<double> a_neg = dense_forward(dense, neg, neg_tape);
    double g_neg = 0.0;
    for (double a : a_neg) g_neg += a * a;

    const double threshold = spec_.ff_threshold;
    const double loss = ff_loss(g_pos, g_neg, threshold);
    const double dg_pos = -logistic(threshold - g_pos);
    const double dg_neg = logistic(g_neg - threshold);

    std::vector<double> upstream_pos(a_pos.size());
    for (std::size_t i = 0; i < a_pos.size(); ++i) upstream_pos[i] = dg_pos * 2.0 * a_pos[i];
    std::vector<double> upstream_neg(a_neg.size());
    for (std::size_t i = 0; i < a_neg.size(); ++i) upstream_neg[i] = dg_neg * 2.0 * a_neg[i];

    const DenseGrads gp = dense_backward(dense, upstream_pos, tape);
    const DenseGrads gn = dense_backward(dense, upstream_neg, neg_tape);
    std::vector<double> flat;
    flat.reserve(dense.weights.size() + dense.bias.size());
    for (std::size_t k = 0; k < gp.weight_grad.size(); ++k) {
      flat.push_back(gp.weight_grad[k] + gn.weight_grad[k]);
    }
    for (std::size_t k = 0; k < gp.bias_grad.size(); ++k) {
      flat.push_back(gp.bias_grad[k] + gn.bias_grad[k]);
    }
    return {loss, std::move(flat)};
  }

  std::vector<FfLayer> layers_;
};

// ---------------------------------------------------------------------------
// Quantum forward-forward: two quantum layers; the second re-encodes the
// first layer's per-qubit <Z> vector as angles in [0, pi].
// ---------------------------------------------------------------------------

class QuantumFfModel final : public FfModel {
 public:
  explicit QuantumFfModel(const ModelSpec& spec) : FfModel(spec) {
    Rng rng(spec.seed);
    layers_.resize(2);
    layers_[0].qlayer = QuantumLayer::build(spec.num_qubits, spec.ansatz_depth,
                                            encoding_capacity(spec.num_qubits));
    layers_[1].qlayer =
        QuantumLayer::build(spec.num_qubits, spec.ansatz_depth, spec.num_qubits);
    for (QffLayer& layer : layers_) {
      layer.qlayer.theta = init_theta(layer.qlayer.theta.size(), rng);
    }
    set_optimizer(OptimizerKind::Adam);
  }

  int num_layers() const override { return static_cast<int>(layers_.size()); }

  std::size_t layer_parameter_count(int layer) const override {
    return layers_.at(static_cast<std::size_t>(layer)).qlayer.theta.size();
  }

  void set_optimizer(OptimizerKind kind) override {
    for (QffLayer& layer : layers_) {
      layer.opt = make_optimizer(kind, 0.0, layer.qlayer.theta.size());
    }
  }

  double ff_train_step(int layer, std::span<const std::vector<double>> positive,
                       std::span<const std::vector<double>> negative,
                       double learning_rate, const GradOptions& opts) override {
    check_batches(positive, negative);
    QffLayer& state = layers_.at(static_cast<std::size_t>(layer));
    const std::size_t n = positive.size();
    const std::size_t pcount = state.qlayer.theta.size();

    std::vector<std::vector<double>> pair_grads(n);
    std::vector<double> pair_loss(n);
    parallel_for(n, [&](std::size_t i) {
      auto [loss, grad] = pair_gradient(state.qlayer, positive[i], negative[i], opts);
      pair_loss[i] = loss;
      pair_grads[i] = std::move(grad);
    });

    std::vector<double> grad(pcount, 0.0);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss_sum += pair_loss[i];
      for (std::size_t k = 0; k < pcount; ++k) grad[k] += pair_grads[i][k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= inv;

    state.opt.learning_rate = learning_rate;
    optimizer_step(state.opt, state.qlayer.theta, grad);
    return loss_sum * inv;
  }

  std::vector<double> layer_transform(int layer,
                                      std::span<const double> input) const override {
    return forward(layer, input).second;
  }

  double layer_goodness(int layer, std::span<const double> input) const override {
    return forward(layer, input).first;
  }

  std::vector<double> parameters() const override {
    std::vector<double> flat;
    for (const QffLayer& layer : layers_) {
      flat.insert(flat.end(), layer.qlayer.theta.begin(), layer.qlayer.theta.end());
    }
    return flat;
  }

  void set_parameters(std::span<const double> flat) override {
    check_flat_size(flat, num_parameters());
    std::size_t offset = 0;
    for (QffLayer& layer : layers_) {
      for (double& t : layer.qlayer.theta) t = flat[offset++];
    }
  }

 private:
  struct QffLayer {
    QuantumLayer qlayer;
    OptimizerState opt;
  };

  FfForward forward(int layer, std::span<const double> input) const {
    const QuantumLayer& q = layers_.at(static_cast<std::size_t>(layer)).qlayer;
    const std::vector<double> z = q.expectations(input);
    return {goodness(z), squash_to_angles(z)};
  }

  void check_batches(std::span<const std::vector<double>> positive,
                     std::span<const std::vector<double>> negative) const {
    if (positive.empty() || negative.empty()) {
      throw InputError("ff_train_step needs nonempty batches");
    }
    if (positive.size() != negative.size()) {
      throw ShapeError("positive and negative batches must pair up");
    }
    const std::size_t arity = positive.front().size();
    for (const auto& v : positive) {
      if (v.size() != arity) throw ShapeError("positive batch feature arity mismatch");
    }
    for (const auto& v : negative) {
      if (v.size() != arity) throw ShapeError("negative batch feature arity mismatch");
    }
  }

  std::pair<double, std::vector<double>> pair_gradient(const QuantumLayer& q,
                                                       std::span<const double> pos,
                                                       std::span<const double> neg,
                                                       const GradOptions& opts) const {
    const std::vector<double> z_pos = q.expectations(pos);
    const std::vector<double> z_neg = q.expectations(neg);
    const double g_pos = goodness(z_pos);
    const double g_neg = goodness(z_neg);
    const double threshold = spec_.ff_threshold;
    const double loss = ff_loss(g_pos, g_neg, threshold);
    const double dg_pos = -logistic(threshold - g_pos);
    const double dg_neg = logistic(g_neg - threshold);

    const auto jac_pos = q.theta_jacobian(pos, opts.shift);
    const auto jac_neg = q.theta_jacobian(neg, opts.shift);
    std::vector<double> grad(q.theta.size(), 0.0);
    for (std::size_t j = 0; j < z_pos.size(); ++j) {
      const double cp = dg_pos * 2.0 * z_pos[j];
      const double cn = dg_neg * 2.0 * z_neg[j];
      for (std::size_t t = 0; t < grad.size(); ++t) {
        grad[t] += cp * jac_pos[j][t] + cn * jac_neg[j][t];
      }
    }
    return {loss, std::move(grad)};
  }

  std::vector<QffLayer> layers_;
};

std::unique_ptr<Model> build_model(const ModelSpec& spec) {
  validate_spec(spec);
  switch (spec.kind) {
    case ModelKind::QMLP: return std::make_unique<QmlpModel>(spec);
    case ModelKind::QFF: return std::make_unique<QuantumFfModel>(spec);
    case ModelKind::QBP: return std::make_unique<QbpModel>(spec);
    case ModelKind::BaselineQNN: return std::make_unique<BaselineQnnModel>(spec);
    case ModelKind::ClassicalMLP: return std::make_unique<ClassicalMlpModel>(spec);
    case ModelKind::ClassicalFF: return std::make_unique<ClassicalFfModel>(spec);
  }
  throw ConfigError("unknown model kind");
}

LogitModel& as_logit(Model& model) {
  if (auto* m = dynamic_cast<LogitModel*>(&model)) return *m;
  throw ConfigError(std::string(kind_name(model.spec().kind)) +
                    " is not a logit model");
}

FfModel& as_ff(Model& model) {
  if (auto* m = dynamic_cast<FfModel*>(&model)) return *m;
  throw ConfigError(std::string(kind_name(model.spec().kind)) +
                    " is not a forward-forward model");
}

}  // namespace qml
