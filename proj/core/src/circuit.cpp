#include "qmllab/circuit.hpp"

#include <cmath>
#include <string>

#include "qmllab/errors.hpp"

namespace qml {

bool is_rotation(GateKind kind) {
  return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
}

bool is_two_qubit(GateKind kind) {
  return kind == GateKind::CNOT || kind == GateKind::CZ;
}

const char* gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
  }
  return "?";
}

void Circuit::extend(const Circuit& other) {
  if (other.num_qubits != num_qubits) {
    throw ShapeError("cannot extend a " + std::to_string(num_qubits) +
                     "-qubit circuit with a " + std::to_string(other.num_qubits) +
                     "-qubit one");
  }
  gates.insert(gates.end(), other.gates.begin(), other.gates.end());
}

std::vector<int> Circuit::validate() const {
  std::vector<char> referenced(static_cast<std::size_t>(num_params), 0);
  for (const Gate& g : gates) {
    const int n = g.num_wires();
    for (int w = 0; w < n; ++w) {
      if (g.wires[w] < 0 || g.wires[w] >= num_qubits) {
        throw ShapeError(std::string(gate_name(g.kind)) + " wire " +
                         std::to_string(g.wires[w]) + " out of range for " +
                         std::to_string(num_qubits) + " qubits");
      }
    }
    if (n == 2 && g.wires[0] == g.wires[1]) {
      throw ShapeError(std::string(gate_name(g.kind)) + " wires must be distinct");
    }
    if (is_rotation(g.kind)) {
      if (g.param.kind == GateParam::Kind::None) {
        throw ValidationError(std::string(gate_name(g.kind)) +
                              " requires exactly one parameter");
      }
      if (g.param.kind == GateParam::Kind::Ref) {
        if (g.param.index < 0 || g.param.index >= num_params) {
          throw ValidationError("param ref " + std::to_string(g.param.index) +
                                " outside [0, " + std::to_string(num_params) + ")");
        }
        referenced[static_cast<std::size_t>(g.param.index)] = 1;
      }
    } else if (g.param.kind != GateParam::Kind::None) {
      throw ValidationError(std::string(gate_name(g.kind)) +
                            " does not take a parameter");
    }
  }
  std::vector<int> unused;
  for (int k = 0; k < num_params; ++k) {
    if (!referenced[static_cast<std::size_t>(k)]) unused.push_back(k);
  }
  return unused;
}

double resolve_angle(const Gate& gate, std::span<const double> params) {
  switch (gate.param.kind) {
    case GateParam::Kind::Fixed:
      return gate.param.angle;
    case GateParam::Kind::Ref:
      if (gate.param.index < 0 ||
          static_cast<std::size_t>(gate.param.index) >= params.size()) {
        throw ParamBindingError("param ref " + std::to_string(gate.param.index) +
                                " unresolvable with " +
                                std::to_string(params.size()) + " bound values");
      }
      return params[static_cast<std::size_t>(gate.param.index)];
    case GateParam::Kind::None:
      break;
  }
  throw ParamBindingError(std::string(gate_name(gate.kind)) +
                          " carries no angle to resolve");
}

namespace {

// In-place 2x2 update over all amplitude pairs split by qubit `q`.
void apply_single_qubit(Statevector& state, int q, cplx u00, cplx u01, cplx u10,
                        cplx u11) {
  const std::size_t stride = std::size_t{1} << q;
  const std::size_t dim = state.dim();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const cplx a0 = state.amplitudes[i];
      const cplx a1 = state.amplitudes[i + stride];
      state.amplitudes[i] = u00 * a0 + u01 * a1;
      state.amplitudes[i + stride] = u10 * a0 + u11 * a1;
    }
  }
}

void check_wires(const Statevector& state, const Gate& gate) {
  const int n = gate.num_wires();
  for (int w = 0; w < n; ++w) {
    if (gate.wires[w] < 0 || gate.wires[w] >= state.num_qubits) {
      throw ShapeError(std::string(gate_name(gate.kind)) + " wire " +
                       std::to_string(gate.wires[w]) + " out of range for " +
                       std::to_string(state.num_qubits) + " qubits");
    }
  }
  if (n == 2 && gate.wires[0] == gate.wires[1]) {
    throw ShapeError(std::string(gate_name(gate.kind)) + " wires must be distinct");
  }
}

}  // namespace

void apply_gate_in_place(Statevector& state, const Gate& gate,
                         std::span<const double> params) {
  check_wires(state, gate);
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  switch (gate.kind) {
    case GateKind::H:
      apply_single_qubit(state, gate.wires[0], inv_sqrt2, inv_sqrt2, inv_sqrt2,
                         -inv_sqrt2);
      return;
    case GateKind::X:
      apply_single_qubit(state, gate.wires[0], 0.0, 1.0, 1.0, 0.0);
      return;
    case GateKind::Z:
      apply_single_qubit(state, gate.wires[0], 1.0, 0.0, 0.0, -1.0);
      return;
    case GateKind::RX: {
      const double half = 0.5 * resolve_angle(gate, params);
      const double c = std::cos(half), s = std::sin(half);
      apply_single_qubit(state, gate.wires[0], cplx{c, 0}, cplx{0, -s},
                         cplx{0, -s}, cplx{c, 0});
      return;
    }
    case GateKind::RY: {
      const double half = 0.5 * resolve_angle(gate, params);
      const double c = std::cos(half), s = std::sin(half);
      apply_single_qubit(state, gate.wires[0], cplx{c, 0}, cplx{-s, 0},
                         cplx{s, 0}, cplx{c, 0});
      return;
    }
    case GateKind::RZ: {
      const double half = 0.5 * resolve_angle(gate, params);
      apply_single_qubit(state, gate.wires[0], std::polar(1.0, -half), 0.0, 0.0,
                         std::polar(1.0, half));
      return;
    }
    case GateKind::CNOT: {
      const std::size_t control = std::size_t{1} << gate.wires[0];
      const std::size_t target = std::size_t{1} << gate.wires[1];
      for (std::size_t i = 0; i < state.dim(); ++i) {
        if ((i & control) != 0 && (i & target) == 0) {
          std::swap(state.amplitudes[i], state.amplitudes[i | target]);
        }
      }
      return;
    }
    case GateKind::CZ: {
      const std::size_t mask = (std::size_t{1} << gate.wires[0]) |
                               (std::size_t{1} << gate.wires[1]);
      for (std::size_t i = 0; i < state.dim(); ++i) {
        if ((i & mask) == mask) state.amplitudes[i] = -state.amplitudes[i];
      }
      return;
    }
  }
  throw UnsupportedGateError("unknown gate kind");
}

Statevector apply_gate(const Statevector& state, const Gate& gate,
                       std::span<const double> params) {
  Statevector out = state;
  apply_gate_in_place(out, gate, params);
  return out;
}

Statevector run(const Circuit& circuit, std::span<const double> params,
                const Statevector& input) {
  if (input.num_qubits != circuit.num_qubits) {
    throw ShapeError("circuit expects " + std::to_string(circuit.num_qubits) +
                     " qubits, state has " + std::to_string(input.num_qubits));
  }
  if (static_cast<int>(params.size()) != circuit.num_params) {
    throw ParamBindingError("circuit expects " +
                            std::to_string(circuit.num_params) +
                            " params, got " + std::to_string(params.size()));
  }
  Statevector state = input;
  for (const Gate& g : circuit.gates) {
    apply_gate_in_place(state, g, params);
  }
  return state;
}

}  // namespace qml
