#include "qmllab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmllab/errors.hpp"

namespace qml {

double softplus(double z) {
  // max(z, 0) + log1p(exp(-|z|)) never overflows.
  return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::pair<double, std::vector<double>> softmax_cross_entropy(
    std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " logits");
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> grad(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    grad[i] = std::exp(logits[i] - max_logit);
    sum += grad[i];
  }
  const double loss = (max_logit - logits[static_cast<std::size_t>(label)]) + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    grad[i] /= sum;  // softmax
  }
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return {loss, std::move(grad)};
}

double ff_loss(double g_pos, double g_neg, double threshold) {
  if (threshold <= 0.0) {
    throw InputError("ff_loss threshold must be positive");
  }
  return softplus(threshold - g_pos) + softplus(g_neg - threshold);
}

}  // namespace qml
