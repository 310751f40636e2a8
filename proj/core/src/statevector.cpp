#include "qmllab/statevector.hpp"

#include <cmath>
#include <string>

#include "qmllab/errors.hpp"

namespace qml {

double Statevector::norm() const {
  double sum = 0.0;
  for (const cplx& a : amplitudes) sum += std::norm(a);
  return std::sqrt(sum);
}

Statevector init_state(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw ConfigError("num_qubits must be in [1, " + std::to_string(kMaxQubits) +
                      "], got " + std::to_string(num_qubits));
  }
  Statevector state;
  state.num_qubits = num_qubits;
  state.amplitudes.assign(std::size_t{1} << num_qubits, cplx{0.0, 0.0});
  state.amplitudes[0] = cplx{1.0, 0.0};
  return state;
}

std::vector<double> probabilities(const Statevector& state) {
  std::vector<double> probs(state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) {
    probs[i] = std::norm(state.amplitudes[i]);
  }
  return probs;
}

}  // namespace qml
