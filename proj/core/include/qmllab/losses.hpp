#pragma once

#include <span>
#include <utility>
#include <vector>

namespace qml {

// Overflow-safe ln(1 + e^z).
double softplus(double z);

double logistic(double z);

// Numerically stable cross entropy over raw logits.
// Returns (loss, dLoss/dLogits) with grad = softmax - one_hot(label).
std::pair<double, std::vector<double>> softmax_cross_entropy(
    std::span<const double> logits, int label);

// Forward-forward contrastive objective:
// softplus(threshold - g_pos) + softplus(g_neg - threshold).
double ff_loss(double g_pos, double g_neg, double threshold);

}  // namespace qml
