#pragma once

#include <utility>
#include <vector>

#include "qmllab/statevector.hpp"

namespace qml {

enum class Pauli { X, Y, Z };

// One weighted Pauli string; qubits not listed act as identity.
struct PauliTerm {
  double coefficient = 1.0;
  std::vector<std::pair<int, Pauli>> paulis;
};

struct Observable {
  std::vector<PauliTerm> terms;

  static Observable z(int qubit);
  static Observable zz(int a, int b);
  Observable scaled(double factor) const;
};

// Sum over terms of c * <psi|P|psi>. The value of a Hermitian operator is
// real; the tiny imaginary residue of the inner product is discarded.
double expectation(const Statevector& state, const Observable& obs);

}  // namespace qml
