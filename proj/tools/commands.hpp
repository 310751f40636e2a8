#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qmllab/model_spec.hpp"
#include "qmllab/search.hpp"
#include "qmllab/training.hpp"

namespace qml::cli {

// Raw command-line values; unset optionals fall back to the config file,
// then to built-in defaults.
struct FlagValues {
  std::optional<std::string> config_path;
  std::optional<std::string> model;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<std::string> optimizer;
  std::optional<std::string> generator;
  std::optional<std::string> endpoint;
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<int> qubits;
  std::optional<int> depth;
  std::optional<int> population;
  std::optional<int> generations;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  bool corrupt_shift = false;
};

struct RunConfig {
  std::string data_path;
  std::string out_dir = "out";
  double split_ratio = 0.75;
  ModelSpec spec;
  TrainConfig train;
  SearchConfig search;
  bool corrupt_shift = false;
};

// defaults -> config file (flat dotted keys) -> flags -> QMLLAB_DATA env.
RunConfig make_run_config(const FlagValues& flags);

ModelKind model_kind_from_cli(const std::string& name);  // accepts lowercase

// Shared core of the compare command: trains Baseline QNN, QMLP, QFF and
// QBP under one budget and formats the fixed-order accuracy table.
struct CompareOutcome {
  struct Row {
    std::string name;
    ModelKind kind;
    bool ok = false;
    double accuracy_percent = 0.0;
    std::string error;
  };
  std::vector<Row> rows;
  std::string table;
  bool any_failed = false;
};

CompareOutcome compare_models(const DatasetSplit& data, const ModelSpec& base_spec,
                              const TrainConfig& budget, bool verbose);

int cmd_train(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_search(const RunConfig& config);
int cmd_gradcheck(const RunConfig& config);

// Maps thrown errors onto the stable exit-code contract:
// 0 success, 1 validation/config, 2 runtime failure.
int run_command(int (*command)(const RunConfig&), const FlagValues& flags);

}  // namespace qml::cli
