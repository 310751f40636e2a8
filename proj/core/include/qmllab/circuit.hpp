#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "qmllab/statevector.hpp"

namespace qml {

enum class GateKind { H, X, Z, RX, RY, RZ, CNOT, CZ };

bool is_rotation(GateKind kind);
bool is_two_qubit(GateKind kind);
const char* gate_name(GateKind kind);

// Angle source for rotation gates: a literal angle or an index into the
// parameter vector supplied at run time.
struct GateParam {
  enum class Kind { None, Fixed, Ref };
  Kind kind = Kind::None;
  double angle = 0.0;
  int index = -1;

  static GateParam none() { return {}; }
  static GateParam fixed(double a) { return {Kind::Fixed, a, -1}; }
  static GateParam ref(int k) { return {Kind::Ref, 0.0, k}; }
};

struct Gate {
  GateKind kind = GateKind::H;
  std::array<int, 2> wires{-1, -1};  // [control, target] for CNOT/CZ
  GateParam param;

  int num_wires() const { return is_two_qubit(kind) ? 2 : 1; }

  static Gate h(int q) { return {GateKind::H, {q, -1}, GateParam::none()}; }
  static Gate x(int q) { return {GateKind::X, {q, -1}, GateParam::none()}; }
  static Gate z(int q) { return {GateKind::Z, {q, -1}, GateParam::none()}; }
  static Gate rx(int q, double a) { return {GateKind::RX, {q, -1}, GateParam::fixed(a)}; }
  static Gate ry(int q, double a) { return {GateKind::RY, {q, -1}, GateParam::fixed(a)}; }
  static Gate rz(int q, double a) { return {GateKind::RZ, {q, -1}, GateParam::fixed(a)}; }
  static Gate rx_ref(int q, int k) { return {GateKind::RX, {q, -1}, GateParam::ref(k)}; }
  static Gate ry_ref(int q, int k) { return {GateKind::RY, {q, -1}, GateParam::ref(k)}; }
  static Gate rz_ref(int q, int k) { return {GateKind::RZ, {q, -1}, GateParam::ref(k)}; }
  static Gate cnot(int control, int target) {
    return {GateKind::CNOT, {control, target}, GateParam::none()};
  }
  static Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, GateParam::none()}; }
};

// Ordered gate program over a fixed qubit count with `num_params`
// run-time parameter slots addressed by GateParam::ref.
struct Circuit {
  int num_qubits = 0;
  int num_params = 0;
  std::vector<Gate> gates;

  void append(Gate g) { gates.push_back(g); }
  // Appends all gates of `other`; qubit counts must match and `other`'s
  // param refs must already fit this circuit's parameter space.
  void extend(const Circuit& other);

  // Throws on structural violations (bad wires, bad param arity, dangling
  // refs). Returns indices in [0, num_params) referenced by no gate.
  std::vector<int> validate() const;
};

double resolve_angle(const Gate& gate, std::span<const double> params);

void apply_gate_in_place(Statevector& state, const Gate& gate,
                         std::span<const double> params = {});
Statevector apply_gate(const Statevector& state, const Gate& gate,
                       std::span<const double> params = {});

// Applies all gates in order to a copy of `input`.
Statevector run(const Circuit& circuit, std::span<const double> params,
                const Statevector& input);

}  // namespace qml
