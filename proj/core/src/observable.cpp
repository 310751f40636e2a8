#include "qmllab/observable.hpp"

#include <string>

#include "qmllab/errors.hpp"

namespace qml {

Observable Observable::z(int qubit) {
  return Observable{{PauliTerm{1.0, {{qubit, Pauli::Z}}}}};
}

Observable Observable::zz(int a, int b) {
  return Observable{{PauliTerm{1.0, {{a, Pauli::Z}, {b, Pauli::Z}}}}};
}

Observable Observable::scaled(double factor) const {
  Observable out = *this;
  for (PauliTerm& term : out.terms) term.coefficient *= factor;
  return out;
}

namespace {

void apply_pauli(Statevector& state, int qubit, Pauli pauli) {
  const std::size_t stride = std::size_t{1} << qubit;
  const std::size_t dim = state.dim();
  switch (pauli) {
    case Pauli::X:
      for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
          std::swap(state.amplitudes[i], state.amplitudes[i + stride]);
        }
      }
      return;
    case Pauli::Y:
      // Y|0> = i|1>, Y|1> = -i|0>
      for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
          const cplx a0 = state.amplitudes[i];
          const cplx a1 = state.amplitudes[i + stride];
          state.amplitudes[i] = cplx{0, -1} * a1;
          state.amplitudes[i + stride] = cplx{0, 1} * a0;
        }
      }
      return;
    case Pauli::Z:
      for (std::size_t i = 0; i < dim; ++i) {
        if (i & stride) state.amplitudes[i] = -state.amplitudes[i];
      }
      return;
  }
}

}  // namespace

double expectation(const Statevector& state, const Observable& obs) {
  double value = 0.0;
  for (const PauliTerm& term : obs.terms) {
    for (const auto& [qubit, pauli] : term.paulis) {
      (void)pauli;
      if (qubit < 0 || qubit >= state.num_qubits) {
        throw ShapeError("observable wire " + std::to_string(qubit) +
                         " out of range for " + std::to_string(state.num_qubits) +
                         " qubits");
      }
    }
    Statevector scratch = state;
    for (const auto& [qubit, pauli] : term.paulis) {
      apply_pauli(scratch, qubit, pauli);
    }
    cplx inner{0.0, 0.0};
    for (std::size_t i = 0; i < state.dim(); ++i) {
      inner += std::conj(state.amplitudes[i]) * scratch.amplitudes[i];
    }
    value += term.coefficient * inner.real();
  }
  return value;
}

}  // namespace qml
