#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "qmllab/circuit.hpp"
#include "qmllab/observable.hpp"

namespace qml {

using ParamVector = std::vector<double>;

// Shift constant of the two-point rule; exact for exp(-i*theta*P/2)
// generators, which is all the rotation gates this library has.
inline constexpr double kParamShift = std::numbers::pi / 2.0;

enum class Activation { ReLU, Tanh, Identity };

struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights;  // row-major, out_dim x in_dim
  std::vector<double> bias;     // out_dim
  Activation activation = Activation::Identity;
};

// Per-layer cache of (input, pre-activation) recorded by dense_forward and
// consumed in reverse order by dense_backward.
struct GradTape {
  struct Record {
    std::vector<double> input;
    std::vector<double> preact;
  };
  std::vector<Record> records;

  bool empty() const { return records.empty(); }
  std::size_t depth() const { return records.size(); }
};

double activate(Activation act, double z);
double activate_derivative(Activation act, double z);

std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> input, GradTape& tape);
std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> input);

struct DenseGrads {
  std::vector<double> weight_grad;  // same layout as layer.weights
  std::vector<double> bias_grad;
  std::vector<double> input_grad;
};

// Pops the most recent tape record; it must belong to `layer`.
DenseGrads dense_backward(const DenseLayer& layer,
                          std::span<const double> upstream, GradTape& tape);

// d<obs>/d(theta_k) = [E(theta_k + pi/2) - E(theta_k - pi/2)] / 2 for all k.
std::vector<double> param_shift_grad(const Circuit& circuit,
                                     const Observable& obs,
                                     std::span<const double> params,
                                     const Statevector& input);

// Shift rule over a subset of parameter indices, evaluated for several
// observables at once; the two shifted states per parameter are shared
// across observables. result[row = observable][col = subset position].
// `shift` is exposed for negative-control testing; pi/2 is the exact value.
std::vector<std::vector<double>> param_shift_jacobian(
    const Circuit& circuit, std::span<const Observable> observables,
    std::span<const double> params, const Statevector& input,
    std::span<const int> param_indices, double shift = kParamShift);

// Central-difference oracle: [E(theta_k + eps) - E(theta_k - eps)] / (2 eps).
std::vector<double> finite_diff_grad(const Circuit& circuit,
                                     const Observable& obs,
                                     std::span<const double> params,
                                     const Statevector& input, double epsilon);

// Gradient of <obs> with respect to the encoding angles of a circuit whose
// parameter vector is the concatenation [encoding angles, theta]. Runs the
// shift rule on the leading block, starting from |0...0>.
std::vector<double> hybrid_input_grad(const Circuit& circuit,
                                      const Observable& obs,
                                      std::span<const double> theta,
                                      std::span<const double> encoded_input_angles);

}  // namespace qml
