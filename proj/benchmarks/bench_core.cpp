#include <benchmark/benchmark.h>

#include <numbers>

#include "qmllab/circuit.hpp"
#include "qmllab/gradients.hpp"
#include "qmllab/models.hpp"
#include "qmllab/observable.hpp"
#include "qmllab/rng.hpp"

namespace {

using namespace qml;

void BM_ApplyHadamard(benchmark::State& state) {
  const int num_qubits = static_cast<int>(state.range(0));
  Statevector sv = init_state(num_qubits);
  const Gate gate = Gate::h(num_qubits / 2);
  for (auto _ : state) {
    apply_gate_in_place(sv, gate);
    benchmark::DoNotOptimize(sv.amplitudes.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sv.dim()));
}
BENCHMARK(BM_ApplyHadamard)->Arg(4)->Arg(8)->Arg(12);

void BM_RunAnsatz(benchmark::State& state) {
  const int num_qubits = static_cast<int>(state.range(0));
  Circuit circuit = encoding_prefix(2 * num_qubits, num_qubits);
  append_ansatz(circuit, num_qubits, 2, 2 * num_qubits);
  Rng rng(1);
  std::vector<double> params(static_cast<std::size_t>(circuit.num_params));
  for (double& p : params) p = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Statevector input = init_state(num_qubits);
  for (auto _ : state) {
    Statevector out = run(circuit, params, input);
    benchmark::DoNotOptimize(out.amplitudes.data());
  }
}
BENCHMARK(BM_RunAnsatz)->Arg(4)->Arg(8)->Arg(10);

void BM_Expectation(benchmark::State& state) {
  const int num_qubits = static_cast<int>(state.range(0));
  Rng rng(2);
  Statevector sv = init_state(num_qubits);
  for (cplx& a : sv.amplitudes) a = cplx{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const double norm = sv.norm();
  for (cplx& a : sv.amplitudes) a /= norm;
  const Observable obs = Observable::zz(0, num_qubits - 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(expectation(sv, obs));
  }
}
BENCHMARK(BM_Expectation)->Arg(8)->Arg(12);

void BM_ParamShiftGradient(benchmark::State& state) {
  const int num_qubits = static_cast<int>(state.range(0));
  Circuit circuit;
  circuit.num_qubits = num_qubits;
  append_ansatz(circuit, num_qubits, 1, 0);
  Rng rng(3);
  std::vector<double> params(static_cast<std::size_t>(circuit.num_params));
  for (double& p : params) p = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Statevector input = init_state(num_qubits);
  const Observable obs = Observable::z(0);
  for (auto _ : state) {
    auto grad = param_shift_grad(circuit, obs, params, input);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ParamShiftGradient)->Arg(4)->Arg(8);

void BM_DenseForward(benchmark::State& state) {
  Rng rng(4);
  DenseLayer layer;
  layer.in_dim = 64;
  layer.out_dim = 64;
  layer.activation = Activation::ReLU;
  layer.weights.resize(64 * 64);
  for (double& w : layer.weights) w = rng.uniform(-1, 1);
  layer.bias.assign(64, 0.1);
  std::vector<double> input(64);
  for (double& x : input) x = rng.uniform(-1, 1);
  for (auto _ : state) {
    auto out = dense_forward(layer, input);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenseForward);

}  // namespace

BENCHMARK_MAIN();
