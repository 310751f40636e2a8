#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qmllab/data.hpp"
#include "qmllab/models.hpp"
#include "qmllab/optim.hpp"

namespace qml {

struct TrainConfig {
  int epochs = 15;
  int batch_size = 16;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 1;
  bool shuffle = true;

  bool operator==(const TrainConfig&) const = default;
};

void validate_train_config(const TrainConfig& config);  // throws ConfigError

const char* optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(std::string_view name);  // throws ParseError

struct TrainReport {
  std::vector<double> epoch_loss;            // mean loss per epoch
  std::vector<double> epoch_train_accuracy;  // end-of-epoch train accuracy
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double wall_seconds = 0.0;  // informational; never serialized
};

// JSON document; wall time is deliberately omitted so reports from
// identical runs compare byte-for-byte.
std::string report_to_json(const TrainReport& report, bool pretty = false);

std::string train_config_to_json(const TrainConfig& config, bool pretty = false);
TrainConfig train_config_from_json(const std::string& text);  // strict
std::string canonical_train_config(const TrainConfig& config);

// Kind-dispatched epoch loop: forward-forward kinds take per-layer local
// steps over (positive, negative) batches; all other kinds descend the
// cross-entropy loss. Throws Error on non-finite loss.
TrainReport train(Model& model, const DatasetSplit& split, const TrainConfig& config);

// Fraction of samples whose predicted class matches the label.
double evaluate(const Model& model, std::span<const Sample> samples);

}  // namespace qml
