#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qml {

using cplx = std::complex<double>;

inline constexpr int kMaxQubits = 14;

// Dense amplitude vector over n qubits, little-endian basis ordering:
// qubit 0 is the least significant bit of the basis index.
struct Statevector {
  int num_qubits = 0;
  std::vector<cplx> amplitudes;

  std::size_t dim() const { return amplitudes.size(); }
  double norm() const;
};

// |0...0>
Statevector init_state(int num_qubits);

// p_i = |a_i|^2
std::vector<double> probabilities(const Statevector& state);

}  // namespace qml
