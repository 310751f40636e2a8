#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qmllab/data.hpp"
#include "qmllab/errors.hpp"
#include "qmllab/losses.hpp"
#include "qmllab/models.hpp"
#include "qmllab/observable.hpp"
#include "testutil.hpp"

using namespace qml;
namespace tu = qml::testutil;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> toy_features(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> features(kPooledFeatures);
  for (double& f : features) f = rng.uniform(0.0, kPi);
  return features;
}

// Finite-difference check of loss_and_grad over every trainable parameter.
void check_logit_gradients(LogitModel& model, std::span<const double> features,
                           int label, double tolerance) {
  const auto [loss, grad] = model.loss_and_grad(features, label);
  (void)loss;
  std::vector<double> params = model.parameters();
  REQUIRE(grad.size() == params.size());
  const double eps = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + eps;
    model.set_parameters(params);
    const auto [plus, g1] = softmax_cross_entropy(model.logits(features), label);
    params[k] = saved - eps;
    model.set_parameters(params);
    const auto [minus, g2] = softmax_cross_entropy(model.logits(features), label);
    (void)g1;
    (void)g2;
    params[k] = saved;
    const double numeric = (plus - minus) / (2 * eps);
    CHECK(std::fabs(grad[k] - numeric) < tolerance);
  }
  model.set_parameters(params);
}

}  // namespace

TEST_CASE("model spec validation") {
  ModelSpec spec = default_spec(ModelKind::QBP, 1);
  CHECK_NOTHROW(validate_spec(spec));

  spec.num_qubits = 1;
  CHECK_THROWS_AS(validate_spec(spec), ConfigError);
  spec.num_qubits = 14;
  CHECK_THROWS_AS(validate_spec(spec), ConfigError);

  spec = default_spec(ModelKind::QFF, 1);
  spec.ansatz_depth = 0;
  CHECK_THROWS_AS(validate_spec(spec), ConfigError);

  spec = default_spec(ModelKind::QFF, 1);
  spec.ff_threshold = 0.0;
  CHECK_THROWS_AS(validate_spec(spec), ConfigError);

  spec = default_spec(ModelKind::ClassicalMLP, 1);
  spec.readout_classes = 2;
  CHECK_THROWS_AS(validate_spec(spec), ConfigError);
}

TEST_CASE("spec JSON round trip and strictness") {
  ModelSpec spec = default_spec(ModelKind::QFF, 7);
  spec.ff_threshold = 1.0 / 1.5;
  const std::string text = spec_to_json(spec);
  CHECK(spec_from_json(text) == spec);

  CHECK_THROWS_AS(spec_from_json("{"), ParseError);
  CHECK_THROWS_AS(spec_from_json("[1,2]"), ParseError);
  CHECK_THROWS_AS(
      spec_from_json(R"({"kind":"QBP","num_qubits":8,"ansatz_depth":2,)"
                     R"("classical_widths":[],"ff_threshold":1.0,)"
                     R"("readout_classes":10,"seed":1,"extra":true})"),
      ParseError);
  // num_qubits out of range fails validation at parse time.
  CHECK_THROWS_AS(
      spec_from_json(R"({"kind":"QBP","num_qubits":99,"ansatz_depth":2,)"
                     R"("classical_widths":[],"ff_threshold":1.0,)"
                     R"("readout_classes":10,"seed":1})"),
      ParseError);
}

TEST_CASE("build_model is deterministic in (spec, seed)") {
  const ModelSpec spec = default_spec(ModelKind::QFF, 7);
  const auto a = build_model(spec);
  const auto b = build_model(spec);
  CHECK(a->parameters() == b->parameters());

  ModelSpec other = spec;
  other.seed = 8;
  const auto c = build_model(other);
  CHECK(a->parameters() != c->parameters());
}

TEST_CASE("QMLP quantum layer has 2 * qubits * depth circuit parameters") {
  ModelSpec spec = default_spec(ModelKind::QMLP, 3);
  spec.num_qubits = 8;
  spec.ansatz_depth = 2;
  const auto model = build_model(spec);
  // Flat layout: front stack, theta (32), readout 8x10 + 10.
  std::size_t front = 16 * 16 + 16 + 16 * 16 + 16;
  CHECK(model->num_parameters() == front + 32 + 90);
}

TEST_CASE("BaselineQNN trains only its readout") {
  const ModelSpec spec = default_spec(ModelKind::BaselineQNN, 5);
  const auto model = build_model(spec);
  // 2 * num_qubits quantum features into 10 classes, plus bias.
  CHECK(model->num_parameters() == 16 * 10 + 10);

  auto& logit = as_logit(*model);
  const std::vector<double> features = toy_features(2);
  const std::vector<double> before = logit.logits(features);
  // Zeroing all trainables gives uniform logits: the frozen circuit is
  // not part of the trainable set.
  std::vector<double> zeros(model->num_parameters(), 0.0);
  model->set_parameters(zeros);
  for (double v : logit.logits(features)) CHECK(v == 0.0);
  (void)before;
}

TEST_CASE("encode_features follows the placement rule") {
  std::vector<double> features(16, 0.0);
  features[0] = kPi;
  const Circuit circuit = encode_features(features, 8);
  REQUIRE(circuit.gates.size() == 16);
  CHECK(circuit.gates[0].kind == GateKind::RY);
  CHECK(circuit.gates[0].wires[0] == 0);
  CHECK(circuit.gates[0].param.angle == kPi);
  CHECK(circuit.gates[1].kind == GateKind::RZ);
  CHECK(circuit.gates[1].wires[0] == 0);
  CHECK(circuit.gates[1].param.angle == 0.0);
  CHECK(circuit.gates[2].wires[0] == 1);

  // All-zero features act as the identity on |0...0>: every <Z> stays 1.
  const Circuit zero_enc = encode_features(std::vector<double>(16, 0.0), 8);
  const Statevector state = run(zero_enc, {}, init_state(8));
  for (int q = 0; q < 8; ++q) {
    CHECK(expectation(state, Observable::z(q)) == doctest::Approx(1.0));
  }

  CHECK_THROWS_AS(encode_features(std::vector<double>(17, 0.0), 8), ShapeError);
}

TEST_CASE("goodness sums squared expectations") {
  CHECK(goodness({{1.0, -1.0}}) == 2.0);
  CHECK(goodness({{0.0, 0.0, 0.0}}) == 0.0);

  // Bell state marginals are maximally mixed: per-qubit <Z> is 0.
  Circuit bell;
  bell.num_qubits = 2;
  bell.append(Gate::h(0));
  bell.append(Gate::cnot(0, 1));
  const Statevector state = run(bell, {}, init_state(2));
  const std::vector<double> z = {expectation(state, Observable::z(0)),
                                 expectation(state, Observable::z(1))};
  CHECK(goodness(z) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(goodness({{1.5}}), InputError);
}

TEST_CASE("ff_loss analytic values") {
  const double theta = 1.7;
  CHECK(ff_loss(theta, theta, theta) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
  CHECK(ff_loss(1e9, 0.0, 1.0) ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
  CHECK(ff_loss(0.3132617, 0.0, 1.0) > 0.0);
  CHECK_THROWS_AS(ff_loss(1.0, 1.0, 0.0), InputError);
  // Overflow safety at extreme arguments.
  CHECK(std::isfinite(ff_loss(-1e8, 1e8, 1.0)));
}

TEST_CASE("ff_loss gradient through a quantum layer matches finite differences") {
  for (std::uint64_t seed = 11; seed <= 13; ++seed) {
    ModelSpec spec = default_spec(ModelKind::QFF, seed);
    spec.num_qubits = 4;
    spec.ansatz_depth = 1;
    const auto model = build_model(spec);
    auto& ff = as_ff(*model);

    Rng rng(seed - 8);
    std::vector<double> pos(8), neg(8);
    for (double& v : pos) v = rng.uniform(0.0, kPi);
    for (double& v : neg) v = rng.uniform(0.0, kPi);

    const std::vector<double> before = model->parameters();

    // One SGD step with lr 1 on layer 0 exposes the analytic gradient as
    // (params_before - params_after).
    ff.set_optimizer(OptimizerKind::SGD);
    ff.ff_train_step(0, std::vector<std::vector<double>>{pos},
                     std::vector<std::vector<double>>{neg}, 1.0);
    const std::vector<double> after = model->parameters();

    auto loss_at = [&](const std::vector<double>& params) {
      model->set_parameters(params);
      const double g_pos = ff.layer_goodness(0, pos);
      const double g_neg = ff.layer_goodness(0, neg);
      return ff_loss(g_pos, g_neg, spec.ff_threshold);
    };

    const std::size_t layer0_params = 2 * 4 * 1;
    std::vector<double> probe = before;
    for (std::size_t k = 0; k < layer0_params; ++k) {
      const double analytic = before[k] - after[k];
      const double saved = probe[k];
      probe[k] = saved + 1e-5;
      const double plus = loss_at(probe);
      probe[k] = saved - 1e-5;
      const double minus = loss_at(probe);
      probe[k] = saved;
      const double numeric = (plus - minus) / 2e-5;
      CHECK(std::fabs(analytic - numeric) < 1e-4);
    }
  }
}

TEST_CASE("ff_train_step raises positive goodness over a run") {
  ModelSpec spec = default_spec(ModelKind::ClassicalFF, 19);
  spec.classical_widths = {16};
  const auto model = build_model(spec);
  auto& ff = as_ff(*model);
  ff.set_optimizer(OptimizerKind::SGD);

  const std::vector<std::vector<double>> pos = {overlay_label(toy_features(1), 2)};
  const std::vector<std::vector<double>> neg = {overlay_label(toy_features(1), 7)};

  std::vector<double> history;
  for (int step = 0; step < 200; ++step) {
    ff.ff_train_step(0, pos, neg, 0.1);
    history.push_back(ff.layer_goodness(0, pos[0]));
  }
  // 10-step moving averages must climb.
  auto window = [&](std::size_t start) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + 10; ++i) sum += history[i];
    return sum / 10.0;
  };
  for (std::size_t start = 0; start + 20 <= history.size(); start += 10) {
    CHECK(window(start + 10) >= window(start) - 1e-9);
  }
  CHECK(window(history.size() - 10) > window(0));
}

TEST_CASE("ff_train_step with zero learning rate is a no-op on parameters") {
  const ModelSpec spec = default_spec(ModelKind::QFF, 23);
  const auto model = build_model(spec);
  auto& ff = as_ff(*model);

  const std::vector<std::vector<double>> pos = {overlay_label(toy_features(4), 1)};
  const std::vector<std::vector<double>> neg = {overlay_label(toy_features(4), 6)};
  const std::vector<double> before = model->parameters();
  ff.ff_train_step(0, pos, neg, 0.0);
  CHECK(model->parameters() == before);
}

TEST_CASE("ff_train_step decreases the batch loss in most seeded trials") {
  int improved = 0;
  for (std::uint64_t trial = 1; trial <= 50; ++trial) {
    ModelSpec spec = default_spec(ModelKind::ClassicalFF, trial);
    spec.classical_widths = {12};
    const auto model = build_model(spec);
    auto& ff = as_ff(*model);
    ff.set_optimizer(OptimizerKind::SGD);

    Rng rng(trial * 101);
    std::vector<std::vector<double>> pos, neg;
    for (int i = 0; i < 6; ++i) {
      std::vector<double> f(kPooledFeatures);
      for (double& v : f) v = rng.uniform(0.0, kPi);
      const int label = static_cast<int>(rng.uniform_int(10));
      Sample s{f, label, FeatureStage::Encoded};
      pos.push_back(overlay_label(f, label));
      neg.push_back(make_negative(s, rng).features);
    }

    const double before = ff.ff_train_step(0, pos, neg, 0.0);   // lr 0: measures loss
    const double after_step = ff.ff_train_step(0, pos, neg, 0.05);
    CHECK(before == after_step);  // same params, same batch
    const double after = ff.ff_train_step(0, pos, neg, 0.0);
    if (after <= before) ++improved;
  }
  CHECK(improved >= 45);
}

TEST_CASE("ff_train_step rejects bad batches and touches only its layer") {
  const ModelSpec spec = default_spec(ModelKind::QFF, 31);
  const auto model = build_model(spec);
  auto& ff = as_ff(*model);
  REQUIRE(ff.num_layers() == 2);

  CHECK_THROWS_AS(ff.ff_train_step(0, {}, {}, 0.1), InputError);
  const std::vector<std::vector<double>> pos = {overlay_label(toy_features(1), 0)};
  const std::vector<std::vector<double>> ragged = {std::vector<double>(7, 0.1)};
  CHECK_THROWS_AS(ff.ff_train_step(0, pos, ragged, 0.1), ShapeError);

  // Locality: stepping layer 0 leaves layer 1 untouched, exactly.
  const std::vector<std::vector<double>> neg = {overlay_label(toy_features(1), 5)};
  const std::vector<double> before = model->parameters();
  const std::size_t layer0 = 2ull * spec.num_qubits * spec.ansatz_depth;
  ff.ff_train_step(0, pos, neg, 0.1);
  const std::vector<double> after = model->parameters();
  bool layer0_changed = false;
  for (std::size_t k = 0; k < layer0; ++k) {
    layer0_changed = layer0_changed || before[k] != after[k];
  }
  CHECK(layer0_changed);
  for (std::size_t k = layer0; k < before.size(); ++k) CHECK(before[k] == after[k]);
}

TEST_CASE("ff_predict ties break to the lowest class") {
  // All-zero weights: every overlay yields goodness 0 in every layer.
  ModelSpec spec = default_spec(ModelKind::ClassicalFF, 3);
  const auto model = build_model(spec);
  std::vector<double> zeros(model->num_parameters(), 0.0);
  model->set_parameters(zeros);
  CHECK(model->predict(toy_features(9)) == 0);
}

TEST_CASE("ff_predict returns the goodness argmax") {
  // A single unit wired to overlay slot 3 makes class 3 the winner.
  ModelSpec spec = default_spec(ModelKind::ClassicalFF, 3);
  spec.classical_widths = {4};
  const auto model = build_model(spec);
  std::vector<double> params(model->num_parameters(), 0.0);
  params[3] = 1.0;  // weight row 0, input slot 3
  model->set_parameters(params);
  CHECK(model->predict(toy_features(8)) == 3);

  // Brute-force argmax consistency on seeded untrained models.
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto m = build_model(default_spec(ModelKind::ClassicalFF, seed));
    auto& ff = as_ff(*m);
    const std::vector<double> features = toy_features(seed + 40);
    int best = 0;
    double best_goodness = 0.0;
    for (int c = 0; c < 10; ++c) {
      const double g = ff.total_goodness(overlay_label(features, c));
      if (c == 0 || g > best_goodness) {
        best = c;
        best_goodness = g;
      }
    }
    const int predicted = m->predict(features);
    CHECK(predicted == best);
    CHECK(predicted >= 0);
    CHECK(predicted <= 9);
  }
}

TEST_CASE("QFF goodness respects the 0..num_qubits bound") {
  const ModelSpec spec = default_spec(ModelKind::QFF, 29);
  const auto model = build_model(spec);
  auto& ff = as_ff(*model);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<double> input = overlay_label(toy_features(seed), 4);
    for (int layer = 0; layer < ff.num_layers(); ++layer) {
      const double g = ff.layer_goodness(layer, input);
      CHECK(g >= 0.0);
      CHECK(g <= spec.num_qubits + 1e-9);
      if (layer + 1 < ff.num_layers()) input = ff.layer_transform(layer, input);
    }
  }
}

TEST_CASE("QMLP forward contract") {
  const ModelSpec spec = default_spec(ModelKind::QMLP, 13);
  const auto model = build_model(spec);
  auto& logit = as_logit(*model);
  const std::vector<double> features = toy_features(6);

  std::vector<double> scores = logit.logits(features);
  REQUIRE(scores.size() == 10);
  for (double v : scores) CHECK(std::isfinite(v));

  // Zero readout weights and bias collapse the logits to exactly zero.
  std::vector<double> params = model->parameters();
  for (std::size_t k = params.size() - 90; k < params.size(); ++k) params[k] = 0.0;
  model->set_parameters(params);
  for (double v : logit.logits(features)) CHECK(v == 0.0);
}

TEST_CASE("QMLP end-to-end gradients match finite differences") {
  for (std::uint64_t seed = 17; seed <= 19; ++seed) {
    ModelSpec spec = default_spec(ModelKind::QMLP, seed);
    spec.num_qubits = 3;
    spec.ansatz_depth = 1;
    spec.classical_widths = {6};
    const auto model = build_model(spec);
    check_logit_gradients(as_logit(*model), toy_features(seed - 5), 4, 1e-4);
  }
}

TEST_CASE("QBP forward contract") {
  ModelSpec spec = default_spec(ModelKind::QBP, 19);
  const auto model = build_model(spec);
  auto& logit = as_logit(*model);

  CHECK(logit.logits(toy_features(3)).size() == 10);

  // Zero rotations everywhere leave |0...0> fixed even through the CNOT
  // ring, so every <Z> reads 1.
  std::vector<double> params = model->parameters();
  for (std::size_t k = 0; k < 32; ++k) params[k] = 0.0;  // theta
  model->set_parameters(params);
  const std::vector<double> zero_features(16, 0.0);
  Circuit probe = encoding_prefix(16, 8);
  append_ansatz(probe, 8, 2, 16);
  std::vector<double> bound(48, 0.0);
  const Statevector state = run(probe, bound, init_state(8));
  for (int q = 0; q < 8; ++q) {
    CHECK(expectation(state, Observable::z(q)) == doctest::Approx(1.0));
  }
}

TEST_CASE("QBP joint gradients match finite differences") {
  for (std::uint64_t seed = 23; seed <= 25; ++seed) {
    ModelSpec spec = default_spec(ModelKind::QBP, seed);
    spec.num_qubits = 3;
    spec.ansatz_depth = 1;
    const auto model = build_model(spec);
    std::vector<double> features(6);
    Rng rng(seed * 2);
    for (double& f : features) f = rng.uniform(0.0, kPi);
    check_logit_gradients(as_logit(*model), features, 7, 1e-4);
  }
}

TEST_CASE("BaselineQNN forward contract") {
  const ModelSpec spec = default_spec(ModelKind::BaselineQNN, 37);
  const auto model = build_model(spec);
  auto& logit = as_logit(*model);
  CHECK(logit.logits(toy_features(5)).size() == 10);

  std::vector<double> zeros(model->num_parameters(), 0.0);
  model->set_parameters(zeros);
  const std::vector<double> uniform = logit.logits(toy_features(5));
  for (double v : uniform) CHECK(v == 0.0);
  CHECK(model->predict(toy_features(5)) == 0);  // uniform ties to class 0
}

TEST_CASE("BaselineQNN readout gradients match finite differences") {
  for (std::uint64_t seed = 41; seed <= 43; ++seed) {
    ModelSpec spec = default_spec(ModelKind::BaselineQNN, seed);
    spec.num_qubits = 3;
    const auto model = build_model(spec);
    std::vector<double> features(6);
    Rng rng(seed - 27);
    for (double& f : features) f = rng.uniform(0.0, kPi);
    check_logit_gradients(as_logit(*model), features, 2, 1e-4);
  }
}

TEST_CASE("ClassicalMLP gradients match finite differences") {
  for (std::uint64_t seed = 43; seed <= 45; ++seed) {
    ModelSpec spec = default_spec(ModelKind::ClassicalMLP, seed);
    spec.classical_widths = {12};
    const auto model = build_model(spec);
    check_logit_gradients(as_logit(*model), toy_features(seed - 28), 9, 1e-5);
  }
}

TEST_CASE("quantum layer outputs stay in [-1, 1]") {
  for (const ModelKind kind :
       {ModelKind::QMLP, ModelKind::QBP, ModelKind::BaselineQNN}) {
    ModelSpec spec = default_spec(kind, 51);
    spec.num_qubits = 4;
    const QuantumLayer layer =
        QuantumLayer::build(spec.num_qubits, spec.ansatz_depth, 8);
    Rng rng(7);
    std::vector<double> features(8);
    for (double& f : features) f = rng.uniform(0.0, kPi);
    for (double z : layer.expectations(features)) {
      CHECK(z >= -1.0 - 1e-12);
      CHECK(z <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("build_model rejects invalid specs") {
  ModelSpec spec = default_spec(ModelKind::ClassicalFF, 1);
  spec.classical_widths.clear();
  CHECK_THROWS_AS(build_model(spec), ConfigError);

  ModelSpec bad = default_spec(ModelKind::QBP, 1);
  bad.num_qubits = 1;
  CHECK_THROWS_AS(build_model(bad), ConfigError);
}
