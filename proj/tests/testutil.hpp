#pragma once

// Shared helpers for the unit and acceptance suites. The dense-matrix
// circuit oracle composes full 2^n x 2^n gate matrices and multiplies
// them out, deliberately sharing no code with the library's in-place
// amplitude updates.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qmllab/circuit.hpp"
#include "qmllab/data.hpp"
#include "qmllab/rng.hpp"
#include "qmllab/statevector.hpp"

namespace qml::testutil {

using Matrix = std::vector<std::vector<cplx>>;

inline Matrix identity_matrix(std::size_t dim) {
  Matrix m(dim, std::vector<cplx>(dim, cplx{0, 0}));
  for (std::size_t i = 0; i < dim; ++i) m[i][i] = cplx{1, 0};
  return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  const std::size_t dim = a.size();
  Matrix out(dim, std::vector<cplx>(dim, cplx{0, 0}));
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t k = 0; k < dim; ++k) {
      const cplx ark = a[r][k];
      if (ark == cplx{0, 0}) continue;
      for (std::size_t c = 0; c < dim; ++c) out[r][c] += ark * b[k][c];
    }
  }
  return out;
}

// Full-dimension matrix of one gate, built entry-by-entry from the gate's
// action on basis states.
inline Matrix gate_matrix(const Gate& gate, std::span<const double> params,
                          int num_qubits) {
  const std::size_t dim = std::size_t{1} << num_qubits;
  Matrix m(dim, std::vector<cplx>(dim, cplx{0, 0}));

  if (gate.kind == GateKind::CNOT) {
    const std::size_t control = std::size_t{1} << gate.wires[0];
    const std::size_t target = std::size_t{1} << gate.wires[1];
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t r = (c & control) ? (c ^ target) : c;
      m[r][c] = cplx{1, 0};
    }
    return m;
  }
  if (gate.kind == GateKind::CZ) {
    const std::size_t mask = (std::size_t{1} << gate.wires[0]) |
                             (std::size_t{1} << gate.wires[1]);
    for (std::size_t c = 0; c < dim; ++c) {
      m[c][c] = ((c & mask) == mask) ? cplx{-1, 0} : cplx{1, 0};
    }
    return m;
  }

  cplx u[2][2];
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  switch (gate.kind) {
    case GateKind::H:
      u[0][0] = inv_sqrt2; u[0][1] = inv_sqrt2;
      u[1][0] = inv_sqrt2; u[1][1] = -inv_sqrt2;
      break;
    case GateKind::X:
      u[0][0] = 0; u[0][1] = 1;
      u[1][0] = 1; u[1][1] = 0;
      break;
    case GateKind::Z:
      u[0][0] = 1; u[0][1] = 0;
      u[1][0] = 0; u[1][1] = -1;
      break;
    case GateKind::RX: {
      const double half = 0.5 * resolve_angle(gate, params);
      u[0][0] = std::cos(half); u[0][1] = cplx{0, -std::sin(half)};
      u[1][0] = cplx{0, -std::sin(half)}; u[1][1] = std::cos(half);
      break;
    }
    case GateKind::RY: {
      const double half = 0.5 * resolve_angle(gate, params);
      u[0][0] = std::cos(half); u[0][1] = -std::sin(half);
      u[1][0] = std::sin(half); u[1][1] = std::cos(half);
      break;
    }
    case GateKind::RZ: {
      const double half = 0.5 * resolve_angle(gate, params);
      u[0][0] = std::exp(cplx{0, -half}); u[0][1] = 0;
      u[1][0] = 0; u[1][1] = std::exp(cplx{0, half});
      break;
    }
    default:
      return m;
  }

  const std::size_t bit = std::size_t{1} << gate.wires[0];
  for (std::size_t c = 0; c < dim; ++c) {
    for (int rb = 0; rb < 2; ++rb) {
      const std::size_t r = rb ? (c | bit) : (c & ~bit);
      m[r][c] += u[rb][(c & bit) ? 1 : 0];
    }
  }
  return m;
}

inline Matrix circuit_unitary(const Circuit& circuit, std::span<const double> params) {
  Matrix total = identity_matrix(std::size_t{1} << circuit.num_qubits);
  for (const Gate& gate : circuit.gates) {
    total = matmul(gate_matrix(gate, params, circuit.num_qubits), total);
  }
  return total;
}

inline std::vector<cplx> apply_matrix(const Matrix& m, const std::vector<cplx>& v) {
  std::vector<cplx> out(v.size(), cplx{0, 0});
  for (std::size_t r = 0; r < v.size(); ++r) {
    for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
  }
  return out;
}

struct RandomCircuit {
  Circuit circuit;
  std::vector<double> params;
};

inline RandomCircuit random_circuit(Rng& rng, int num_qubits, int num_gates,
                                    bool rotations_only = false) {
  RandomCircuit out;
  out.circuit.num_qubits = num_qubits;
  for (int g = 0; g < num_gates; ++g) {
    const int kind_draw = rotations_only
                              ? 3 + static_cast<int>(rng.uniform_int(3))
                              : static_cast<int>(rng.uniform_int(8));
    const auto kind = static_cast<GateKind>(kind_draw);
    const int q0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_qubits)));
    Gate gate;
    if (is_two_qubit(kind)) {
      if (num_qubits < 2) {
        --g;
        continue;
      }
      int q1 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_qubits - 1)));
      if (q1 >= q0) ++q1;
      gate = kind == GateKind::CNOT ? Gate::cnot(q0, q1) : Gate::cz(q0, q1);
    } else if (is_rotation(kind)) {
      const double angle = rng.uniform(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
      if (rng.uniform_int(2) == 0) {
        gate = Gate{kind, {q0, -1}, GateParam::fixed(angle)};
      } else {
        gate = Gate{kind, {q0, -1}, GateParam::ref(out.circuit.num_params)};
        out.circuit.num_params += 1;
        out.params.push_back(angle);
      }
    } else {
      gate = Gate{kind, {q0, -1}, GateParam::none()};
    }
    out.circuit.append(gate);
  }
  return out;
}

inline Statevector random_state(Rng& rng, int num_qubits) {
  Statevector state = init_state(num_qubits);
  for (cplx& a : state.amplitudes) a = cplx{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  double norm = state.norm();
  if (norm == 0.0) {
    state.amplitudes[0] = 1.0;
    norm = 1.0;
  }
  for (cplx& a : state.amplitudes) a /= norm;
  return state;
}

// 16-feature two-blob toy task. The class signal lives in slots 10..15 so
// a label overlay on slots 0..9 cannot erase it; labels are 0 and 1.
inline std::vector<Sample> make_blobs(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int label = i % 2;
    const double center = (label == 0 ? 0.25 : 0.75) * std::numbers::pi;
    Sample s;
    s.label = label;
    s.stage = FeatureStage::Encoded;
    s.features.assign(kPooledFeatures, 0.0);
    for (int slot = 10; slot < kPooledFeatures; ++slot) {
      const double value = center + 0.05 * std::numbers::pi * rng.gaussian();
      s.features[static_cast<std::size_t>(slot)] =
          std::min(std::numbers::pi, std::max(0.0, value));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

inline DatasetSplit blob_split(int count, std::uint64_t seed) {
  const std::vector<Sample> samples = make_blobs(count, seed);
  DatasetSplit split;
  split.seed = seed;
  split.ratio = 1.0;
  split.train = samples;
  split.test = samples;  // toy task scores on its training set
  return split;
}

}  // namespace qml::testutil
