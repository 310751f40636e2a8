#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "qmllab/circuit.hpp"
#include "qmllab/gradients.hpp"
#include "qmllab/model_spec.hpp"
#include "qmllab/observable.hpp"
#include "qmllab/optim.hpp"

namespace qml {

// Options threaded through gradient evaluation. `shift` overrides the
// parameter-shift constant and exists as a negative-control knob for the
// gradcheck command; pi/2 is the exact value.
struct GradOptions {
  double shift = kParamShift;
};

// Angle-encoding prefix with the fixed placement rule: feature 2j sets an
// RY on qubit j, feature 2j+1 an RZ on qubit j. Literal angles.
Circuit encode_features(std::span<const double> features, int num_qubits);

// Same placement rule, but with param refs 0..num_features-1 so the
// features can be bound (and differentiated) at run time.
Circuit encoding_prefix(int num_features, int num_qubits);

// Appends `depth` repetitions of [per-qubit RY(ref), RZ(ref), CNOT ring];
// refs are allocated from `first_ref` upward. Returns one past the last
// ref used.
int append_ansatz(Circuit& circuit, int num_qubits, int depth, int first_ref);

// Quantum FF/readout goodness: sum of squared expectation values.
double goodness(std::span<const double> expectations);

// Encoding + ansatz with per-qubit readout. Circuit parameter layout is
// [encoding angles (num_features slots), theta].
struct QuantumLayer {
  int num_qubits = 0;
  int num_features = 0;
  Circuit circuit;
  ParamVector theta;
  std::vector<Observable> readout;

  static QuantumLayer build(int num_qubits, int depth, int num_features);

  // Features shorter than num_features are padded with angle 0.
  std::vector<double> expectations(std::span<const double> features) const;
  // d<readout_j>/d theta_k, rows = readout observables.
  std::vector<std::vector<double>> theta_jacobian(std::span<const double> features,
                                                  double shift = kParamShift) const;
  // d<readout_j>/d feature_i over the provided features.
  std::vector<std::vector<double>> feature_jacobian(std::span<const double> features,
                                                    double shift = kParamShift) const;

 private:
  std::vector<double> bind(std::span<const double> features) const;
};

class Model {
 public:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~Model() = default;

  const ModelSpec& spec() const { return spec_; }
  virtual int predict(std::span<const double> features) const = 0;

  // Flat trainable parameter vector in a fixed per-model layout; gradients
  // returned elsewhere use the same layout.
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> flat) = 0;
  std::size_t num_parameters() const { return parameters().size(); }

 protected:
  ModelSpec spec_;
};

// Cross-entropy-trained models: QMLP, QBP, BaselineQNN, ClassicalMLP.
class LogitModel : public Model {
 public:
  using Model::Model;
  virtual std::vector<double> logits(std::span<const double> features) const = 0;
  // Cross-entropy loss and its gradient with respect to parameters().
  virtual std::pair<double, std::vector<double>> loss_and_grad(
      std::span<const double> features, int label,
      const GradOptions& opts = {}) const = 0;

  // argmax of logits; ties resolve to the lowest class index.
  int predict(std::span<const double> features) const override;
};

// Forward-forward models: QFF, ClassicalFF. Layers train locally; no
// gradient ever crosses a layer boundary.
class FfModel : public Model {
 public:
  using Model::Model;
  virtual int num_layers() const = 0;

  // Size of one layer's slice of parameters(); slices are consecutive.
  virtual std::size_t layer_parameter_count(int layer) const = 0;

  // One optimizer step on layer `layer` against the mean ff loss over the
  // (positive, negative) batch. Returns that mean loss. Parameters of
  // every other layer are untouched.
  virtual double ff_train_step(int layer,
                               std::span<const std::vector<double>> positive,
                               std::span<const std::vector<double>> negative,
                               double learning_rate,
                               const GradOptions& opts = {}) = 0;

  // Resets per-layer optimizer state.
  virtual void set_optimizer(OptimizerKind kind) = 0;

  // Activity vector handed to layer+1 when `layer` sees `input`.
  std::vector<double> layer_transform(int layer, std::span<const double> input) const;
  double layer_goodness(int layer, std::span<const double> input) const;

  // Goodness summed over all layers, chaining transforms.
  double total_goodness(std::span<const double> features) const;

  // Overlay each candidate class, sum goodness across layers, argmax;
  // ties resolve to the lowest class index.
  int predict(std::span<const double> features) const override;

 protected:
  // One evaluation of layer `layer`: (goodness, input for the next layer).
  virtual std::pair<double, std::vector<double>> layer_forward(
      int layer, std::span<const double> input) const = 0;
};

// Deterministic construction: all trainable parameters come from a
// seeded stream, so the same (spec, seed) always yields the same model.
std::unique_ptr<Model> build_model(const ModelSpec& spec);

LogitModel& as_logit(Model& model);  // throws ConfigError when not a logit model
FfModel& as_ff(Model& model);

}  // namespace qml
