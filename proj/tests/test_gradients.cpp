#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qmllab/errors.hpp"
#include "qmllab/gradients.hpp"
#include "qmllab/models.hpp"
#include "qmllab/rng.hpp"
#include "testutil.hpp"

using namespace qml;
namespace tu = qml::testutil;

namespace {

constexpr double kPi = std::numbers::pi;

Circuit single_ry() {
  Circuit circuit;
  circuit.num_qubits = 1;
  circuit.num_params = 1;
  circuit.append(Gate::ry_ref(0, 0));
  return circuit;
}

DenseLayer make_layer(int in_dim, int out_dim, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.activation = act;
  layer.weights.resize(static_cast<std::size_t>(in_dim) * out_dim);
  for (double& w : layer.weights) w = rng.uniform(-1.0, 1.0);
  layer.bias.resize(static_cast<std::size_t>(out_dim));
  for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  return layer;
}

}  // namespace

TEST_CASE("parameter shift on a single RY matches -sin(theta)") {
  const Circuit circuit = single_ry();
  const Observable z = Observable::z(0);
  const Statevector zero = init_state(1);

  const std::vector<double> at_zero = param_shift_grad(circuit, z, {{0.0}}, zero);
  CHECK(at_zero[0] == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<double> at_half_pi =
      param_shift_grad(circuit, z, {{kPi / 2}}, zero);
  CHECK(at_half_pi[0] == doctest::Approx(-1.0));
}

TEST_CASE("finite differences agree with the shift rule") {
  const Circuit circuit = single_ry();
  const Observable z = Observable::z(0);
  const Statevector zero = init_state(1);

  CHECK(std::fabs(finite_diff_grad(circuit, z, {{0.0}}, zero, 1e-5)[0]) < 1e-9);
  CHECK(finite_diff_grad(circuit, z, {{kPi / 2}}, zero, 1e-5)[0] ==
        doctest::Approx(-1.0).epsilon(1e-9));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto [rand_circuit, params] = tu::random_circuit(rng, 3, 10, true);
    const Statevector input = tu::random_state(rng, 3);
    const Observable obs = Observable::z(static_cast<int>(rng.uniform_int(3)));

    const auto shift = param_shift_grad(rand_circuit, obs, params, input);
    const auto fd5 = finite_diff_grad(rand_circuit, obs, params, input, 1e-5);
    const auto fd6 = finite_diff_grad(rand_circuit, obs, params, input, 1e-6);
    double gap5 = 0.0, gap6 = 0.0;
    for (std::size_t k = 0; k < shift.size(); ++k) {
      gap5 = std::max(gap5, std::fabs(shift[k] - fd5[k]));
      gap6 = std::max(gap6, std::fabs(shift[k] - fd6[k]));
    }
    CHECK(gap5 < 1e-4);
    // Consistent with exactness: a finer step only tightens the gap.
    CHECK(gap6 < std::max(gap5, 1e-9));
  }
}

TEST_CASE("parameter shift on a seeded ansatz matches finite differences") {
  Circuit circuit;
  circuit.num_qubits = 3;
  append_ansatz(circuit, 3, 1, 0);  // 6 parameters
  REQUIRE(circuit.num_params == 6);

  Rng rng(17);
  std::vector<double> params(6);
  for (double& p : params) p = rng.uniform(-kPi, kPi);
  const Statevector input = init_state(3);
  const Observable obs = Observable::z(1);

  const auto shift = param_shift_grad(circuit, obs, params, input);
  const auto fd = finite_diff_grad(circuit, obs, params, input, 1e-5);
  for (std::size_t k = 0; k < shift.size(); ++k) {
    CHECK(shift[k] == doctest::Approx(fd[k]).epsilon(1e-4));
  }
}

TEST_CASE("gradient scales linearly with the observable") {
  Rng rng(5);
  const auto [circuit, params] = tu::random_circuit(rng, 2, 8, true);
  const Statevector input = init_state(2);
  const Observable obs = Observable::z(0);

  const auto base = param_shift_grad(circuit, obs, params, input);
  const auto scaled = param_shift_grad(circuit, obs.scaled(3.25), params, input);
  for (std::size_t k = 0; k < base.size(); ++k) {
    CHECK(std::fabs(scaled[k] - 3.25 * base[k]) < 1e-12);
  }
}

TEST_CASE("shift rule rejects bad inputs") {
  const Circuit circuit = single_ry();
  const Observable z = Observable::z(0);
  CHECK_THROWS_AS(param_shift_grad(circuit, z, {{0.0, 1.0}}, init_state(1)),
                  ParamBindingError);
  CHECK_THROWS_AS(
      finite_diff_grad(circuit, z, {{0.0}}, init_state(1), 0.0), InputError);
}

TEST_CASE("dense_forward computes activation(Wx + b)") {
  DenseLayer layer;
  layer.in_dim = 2;
  layer.out_dim = 2;
  layer.weights = {1, 0, 0, 1};
  layer.bias = {0, 0};
  layer.activation = Activation::Identity;

  GradTape tape;
  CHECK(dense_forward(layer, {{2.0, -3.0}}, tape) == std::vector<double>{2.0, -3.0});
  CHECK(tape.depth() == 1);

  layer.activation = Activation::ReLU;
  CHECK(dense_forward(layer, {{2.0, -3.0}}) == std::vector<double>{2.0, 0.0});

  Rng rng(9);
  const DenseLayer random_layer = make_layer(5, 4, Activation::Identity, rng);
  std::vector<double> input(5);
  for (double& x : input) x = rng.uniform(-2, 2);
  const std::vector<double> out = dense_forward(random_layer, input);
  for (int o = 0; o < 4; ++o) {
    double expected = random_layer.bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < 5; ++i) {
      expected += random_layer.weights[static_cast<std::size_t>(o * 5 + i)] *
                  input[static_cast<std::size_t>(i)];
    }
    CHECK(std::fabs(out[static_cast<std::size_t>(o)] - expected) < 1e-12);
  }

  CHECK_THROWS_AS(dense_forward(random_layer, {{1.0, 2.0}}), ShapeError);
}

TEST_CASE("dense_backward zero upstream annihilates") {
  Rng rng(21);
  const DenseLayer layer = make_layer(4, 3, Activation::Tanh, rng);
  GradTape tape;
  dense_forward(layer, {{0.1, -0.2, 0.3, 0.4}}, tape);
  const DenseGrads grads = dense_backward(layer, {{0.0, 0.0, 0.0}}, tape);
  for (double g : grads.weight_grad) CHECK(g == 0.0);
  for (double g : grads.bias_grad) CHECK(g == 0.0);
  for (double g : grads.input_grad) CHECK(g == 0.0);
}

TEST_CASE("dense_backward weight gradient is the outer product y x^T") {
  // Identity activation with loss L = ||y||^2 / 2, so upstream = y.
  Rng rng(33);
  const DenseLayer layer = make_layer(3, 2, Activation::Identity, rng);
  const std::vector<double> x = {0.5, -1.0, 2.0};
  GradTape tape;
  const std::vector<double> y = dense_forward(layer, x, tape);
  const DenseGrads grads = dense_backward(layer, y, tape);
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) {
      CHECK(grads.weight_grad[static_cast<std::size_t>(o * 3 + i)] ==
            doctest::Approx(y[static_cast<std::size_t>(o)] *
                            x[static_cast<std::size_t>(i)]));
    }
  }
}

TEST_CASE("dense_backward errors on a missing or foreign tape") {
  Rng rng(4);
  const DenseLayer layer = make_layer(3, 2, Activation::ReLU, rng);
  GradTape tape;
  CHECK_THROWS_AS(dense_backward(layer, {{1.0, 1.0}}, tape), StateError);

  const DenseLayer other = make_layer(5, 5, Activation::ReLU, rng);
  GradTape other_tape;
  dense_forward(other, {{1, 2, 3, 4, 5}}, other_tape);
  CHECK_THROWS_AS(dense_backward(layer, {{1.0, 1.0}}, other_tape), StateError);
}

TEST_CASE("multi-layer backprop matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed * 77);
    std::vector<DenseLayer> net;
    net.push_back(make_layer(6, 8, Activation::Tanh, rng));
    net.push_back(make_layer(8, 5, Activation::ReLU, rng));
    net.push_back(make_layer(5, 3, Activation::Identity, rng));
    std::vector<double> input(6);
    for (double& x : input) x = rng.uniform(-1, 1);

    // Scalar loss: L = ||output||^2 / 2.
    const auto loss_of = [&]() {
      std::vector<double> h = input;
      for (const DenseLayer& layer : net) h = dense_forward(layer, h);
      double loss = 0.0;
      for (double v : h) loss += 0.5 * v * v;
      return loss;
    };

    GradTape tape;
    std::vector<double> h = input;
    for (const DenseLayer& layer : net) h = dense_forward(layer, h, tape);
    std::vector<double> upstream = h;
    std::vector<DenseGrads> grads(net.size());
    for (std::size_t i = net.size(); i-- > 0;) {
      grads[i] = dense_backward(net[i], upstream, tape);
      upstream = grads[i].input_grad;
    }

    const double eps = 1e-6;
    for (std::size_t layer_idx = 0; layer_idx < net.size(); ++layer_idx) {
      auto check_param = [&](double& slot, double analytic) {
        const double saved = slot;
        slot = saved + eps;
        const double plus = loss_of();
        slot = saved - eps;
        const double minus = loss_of();
        slot = saved;
        const double numeric = (plus - minus) / (2 * eps);
        if (std::fabs(analytic) > 1e-6) {
          CHECK(std::fabs(analytic - numeric) / std::fabs(analytic) < 1e-5);
        } else {
          CHECK(std::fabs(analytic - numeric) < 1e-7);
        }
      };
      for (std::size_t k = 0; k < net[layer_idx].weights.size(); ++k) {
        check_param(net[layer_idx].weights[k], grads[layer_idx].weight_grad[k]);
      }
      for (std::size_t k = 0; k < net[layer_idx].bias.size(); ++k) {
        check_param(net[layer_idx].bias[k], grads[layer_idx].bias_grad[k]);
      }
    }
  }
}

TEST_CASE("hybrid_input_grad differentiates encoding angles") {
  // Single feature encoded as RY(x); <Z> = cos(x), gradient -sin(x).
  Circuit circuit = encoding_prefix(1, 1);
  const Observable z = Observable::z(0);

  CHECK(hybrid_input_grad(circuit, z, {}, {{0.0}})[0] ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hybrid_input_grad(circuit, z, {}, {{kPi / 2}})[0] == doctest::Approx(-1.0));

  // With an ansatz behind the encoding, compare against finite differences.
  Circuit full = encoding_prefix(4, 2);
  append_ansatz(full, 2, 1, 4);
  Rng rng(13);
  std::vector<double> theta(4);
  for (double& t : theta) t = rng.uniform(-kPi, kPi);
  std::vector<double> x(4);
  for (double& v : x) v = rng.uniform(0.0, kPi);

  const auto grad = hybrid_input_grad(full, z, theta, x);
  std::vector<double> all(x.begin(), x.end());
  all.insert(all.end(), theta.begin(), theta.end());
  const auto fd = finite_diff_grad(full, z, all, init_state(2), 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(1e-4));
  }
}

TEST_CASE("hybrid_input_grad rejects mismatched layouts") {
  const Circuit circuit = encoding_prefix(2, 1);
  CHECK_THROWS_AS(
      hybrid_input_grad(circuit, Observable::z(0), {{1.0}}, {{0.5, 0.5}}),
      ParamBindingError);
}
