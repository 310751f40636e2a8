#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "qmllab/data.hpp"
#include "qmllab/errors.hpp"
#include "qmllab/losses.hpp"
#include "qmllab/models.hpp"
#include "qmllab/parallel.hpp"

namespace qml::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Writes via a temp file in the same directory, then renames into place.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

DatasetSplit load_split(const RunConfig& config) {
  if (config.data_path.empty()) {
    throw ConfigError(
        "no dataset given: set --data, the config key data.path, or QMLLAB_DATA");
  }
  const std::vector<Sample> raw = load_digits(config.data_path);
  return split(encode_dataset(raw), config.split_ratio, config.train.seed);
}

void apply_config_file(const std::string& path, RunConfig& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  ojson j;
  try {
    j = ojson::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must be a flat JSON object");

  auto as_int = [](const ojson& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw ConfigError("config key '" + key + "' must be an integer");
    }
    return v.get<int>();
  };
  auto as_double = [](const ojson& v, const std::string& key) {
    if (!v.is_number()) {
      throw ConfigError("config key '" + key + "' must be a number");
    }
    return v.get<double>();
  };
  auto as_string = [](const ojson& v, const std::string& key) {
    if (!v.is_string()) {
      throw ConfigError("config key '" + key + "' must be a string");
    }
    return v.get<std::string>();
  };

  for (const auto& [key, value] : j.items()) {
    if (key == "data.path") out.data_path = as_string(value, key);
    else if (key == "data.split_ratio") out.split_ratio = as_double(value, key);
    else if (key == "out.dir") out.out_dir = as_string(value, key);
    else if (key == "model.kind") out.spec.kind = model_kind_from_cli(as_string(value, key));
    else if (key == "model.qubits") out.spec.num_qubits = as_int(value, key);
    else if (key == "model.depth") out.spec.ansatz_depth = as_int(value, key);
    else if (key == "model.ff_threshold") out.spec.ff_threshold = as_double(value, key);
    else if (key == "model.widths") {
      if (!value.is_array()) throw ConfigError("config key 'model.widths' must be an array");
      out.spec.classical_widths.clear();
      for (const auto& w : value) out.spec.classical_widths.push_back(as_int(w, key));
    } else if (key == "model.seed") out.spec.seed = static_cast<std::uint64_t>(as_int(value, key));
    else if (key == "train.epochs") out.train.epochs = as_int(value, key);
    else if (key == "train.batch") out.train.batch_size = as_int(value, key);
    else if (key == "train.lr") out.train.learning_rate = as_double(value, key);
    else if (key == "train.optimizer") out.train.optimizer = optimizer_from_name(as_string(value, key));
    else if (key == "train.shuffle") {
      if (!value.is_boolean()) throw ConfigError("config key 'train.shuffle' must be a boolean");
      out.train.shuffle = value.get<bool>();
    } else if (key == "train.seed") out.train.seed = static_cast<std::uint64_t>(as_int(value, key));
    else if (key == "search.population") out.search.population = as_int(value, key);
    else if (key == "search.generations") out.search.generations = as_int(value, key);
    else if (key == "search.elite_count") out.search.elite_count = as_int(value, key);
    else if (key == "search.generator") {
      const std::string name = as_string(value, key);
      if (name == "scripted") out.search.generator = GeneratorKind::ScriptedMutation;
      else if (name == "remote") out.search.generator = GeneratorKind::Remote;
      else throw ConfigError("config key 'search.generator' must be scripted or remote");
    } else if (key == "search.endpoint") out.search.endpoint = as_string(value, key);
    else if (key == "search.eval_epochs") out.search.eval_budget.epochs = as_int(value, key);
    else throw ConfigError("unknown config key: '" + key + "'");
  }
}

}  // namespace

ModelKind model_kind_from_cli(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "qmlp") return ModelKind::QMLP;
  if (lower == "qff") return ModelKind::QFF;
  if (lower == "qbp") return ModelKind::QBP;
  if (lower == "baseline" || lower == "baselineqnn") return ModelKind::BaselineQNN;
  if (lower == "classical-mlp" || lower == "classicalmlp") return ModelKind::ClassicalMLP;
  if (lower == "classical-ff" || lower == "classicalff") return ModelKind::ClassicalFF;
  throw ConfigError("unknown model '" + name +
                    "' (expected qmlp|qff|qbp|baseline|classical-mlp|classical-ff)");
}

RunConfig make_run_config(const FlagValues& flags) {
  RunConfig config;
  config.spec = default_spec(ModelKind::QBP, 1);
  config.train.seed = 1;
  config.search = SearchConfig{};

  if (flags.config_path) apply_config_file(*flags.config_path, config);

  if (flags.model) {
    const ModelKind kind = model_kind_from_cli(*flags.model);
    if (kind != config.spec.kind) {
      // Swap in the new kind's defaults but keep shared tuned fields.
      const ModelSpec previous = config.spec;
      config.spec = default_spec(kind, previous.seed);
      config.spec.num_qubits = previous.num_qubits;
      config.spec.ansatz_depth = previous.ansatz_depth;
      config.spec.ff_threshold = previous.ff_threshold;
    }
  }
  if (flags.data) config.data_path = *flags.data;
  if (flags.out) config.out_dir = *flags.out;
  if (flags.qubits) config.spec.num_qubits = *flags.qubits;
  if (flags.depth) config.spec.ansatz_depth = *flags.depth;
  if (flags.epochs) config.train.epochs = *flags.epochs;
  if (flags.batch) config.train.batch_size = *flags.batch;
  if (flags.lr) config.train.learning_rate = *flags.lr;
  if (flags.optimizer) config.train.optimizer = optimizer_from_name(*flags.optimizer);
  if (flags.population) config.search.population = *flags.population;
  if (flags.generations) config.search.generations = *flags.generations;
  if (flags.generator) {
    if (*flags.generator == "scripted") {
      config.search.generator = GeneratorKind::ScriptedMutation;
    } else if (*flags.generator == "remote") {
      config.search.generator = GeneratorKind::Remote;
    } else {
      throw ConfigError("--generator must be scripted or remote");
    }
  }
  if (flags.endpoint) config.search.endpoint = *flags.endpoint;
  if (flags.seed) {
    config.spec.seed = *flags.seed;
    config.train.seed = *flags.seed;
    config.search.seed = *flags.seed;
  }
  config.corrupt_shift = flags.corrupt_shift;

  if (config.data_path.empty()) {
    if (const char* env = std::getenv("QMLLAB_DATA")) config.data_path = env;
  }

  config.search.eval_budget.seed = config.search.seed;
  config.search.eval_budget.batch_size = config.train.batch_size;
  config.search.eval_budget.learning_rate = config.train.learning_rate;
  config.search.eval_budget.optimizer = config.train.optimizer;
  if (flags.epochs) config.search.eval_budget.epochs = *flags.epochs;

  validate_spec(config.spec);
  validate_train_config(config.train);
  return config;
}

int cmd_train(const RunConfig& config) {
  const DatasetSplit data = load_split(config);
  const auto model = build_model(config.spec);
  std::cout << "training " << kind_name(config.spec.kind) << " (seed "
            << config.spec.seed << ") on " << data.train.size() << "/"
            << data.test.size() << " train/test samples\n";

  const TrainReport report = train(*model, data, config.train);

  std::string series = "epoch,loss,train_accuracy\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    series += std::to_string(e + 1) + "," + format_double(report.epoch_loss[e]) +
              "," + format_double(report.epoch_train_accuracy[e]) + "\n";
  }
  write_atomic(fs::path(config.out_dir) / "train_report.json",
               report_to_json(report, true) + "\n");
  write_atomic(fs::path(config.out_dir) / "loss_series.csv", series);

  std::cout << "final train accuracy " << format_double(report.final_train_accuracy)
            << ", test accuracy " << format_double(report.final_test_accuracy)
            << " (" << report.wall_seconds << " s)\n";
  std::cout << "report written to " << (fs::path(config.out_dir) / "train_report.json").string()
            << "\n";
  return 0;
}

CompareOutcome compare_models(const DatasetSplit& data, const ModelSpec& base_spec,
                              const TrainConfig& budget, bool verbose) {
  CompareOutcome outcome;
  outcome.rows = {{"Baseline (QNN)", ModelKind::BaselineQNN, false, 0.0, ""},
                  {"QMLP", ModelKind::QMLP, false, 0.0, ""},
                  {"QFF", ModelKind::QFF, false, 0.0, ""},
                  {"QBP", ModelKind::QBP, false, 0.0, ""}};

  for (CompareOutcome::Row& row : outcome.rows) {
    ModelSpec spec = default_spec(row.kind, base_spec.seed);
    spec.num_qubits = base_spec.num_qubits;
    spec.ansatz_depth = base_spec.ansatz_depth;
    try {
      const auto model = build_model(spec);
      if (verbose) std::cout << "training " << row.name << "...\n" << std::flush;
      const TrainReport report = train(*model, data, budget);
      row.ok = true;
      row.accuracy_percent = 100.0 * report.final_test_accuracy;
      if (verbose) {
        std::cout << "  " << row.name << " test accuracy "
                  << format_double(report.final_test_accuracy) << " ("
                  << report.wall_seconds << " s)\n";
      }
    } catch (const std::exception& e) {
      outcome.any_failed = true;
      row.error = e.what();
      std::cerr << row.name << " failed: " << e.what() << "\n";
    }
  }

  outcome.table = "Model            Average Accuracy (%)\n";
  for (const CompareOutcome::Row& row : outcome.rows) {
    char line[64];
    if (row.ok) {
      std::snprintf(line, sizeof(line), "%-16s %.2f\n", row.name.c_str(),
                    row.accuracy_percent);
    } else {
      std::snprintf(line, sizeof(line), "%-16s FAILED\n", row.name.c_str());
    }
    outcome.table += line;
  }
  outcome.table +=
      "\nReference accuracies from previously reported runs (not asserted):\n"
      "Baseline (QNN) 15.55, QMLP 9.40, QFF 15.17, QBP 12.37\n";
  return outcome;
}

int cmd_compare(const RunConfig& config) {
  const DatasetSplit data = load_split(config);
  const CompareOutcome outcome =
      compare_models(data, config.spec, config.train, true);
  std::cout << outcome.table;
  write_atomic(fs::path(config.out_dir) / "compare_table.txt", outcome.table);
  return outcome.any_failed ? 2 : 0;
}

int cmd_search(const RunConfig& config) {
  const DatasetSplit data = load_split(config);
  validate_search_config(config.search);

  const EvolveResult result = evolve(config.search, data);
  for (const std::string& note : result.archive.notes) {
    std::cerr << "warning: " << note << "\n";
  }

  write_atomic(fs::path(config.out_dir) / "archive.jsonl", result.archive.to_jsonl());

  ojson summary;
  summary["best_id"] = result.best.id;
  summary["best_fitness"] = result.best.fitness.value_or(0.0);
  summary["best_spec"] = ojson::parse(spec_to_json(result.best.spec));
  summary["best_per_generation"] = result.archive.best_per_generation;
  summary["candidates"] = result.archive.size();
  summary["notes"] = result.archive.notes;
  write_atomic(fs::path(config.out_dir) / "search_summary.json", summary.dump(2) + "\n");

  std::cout << "evaluated " << result.archive.size() << " candidates over "
            << config.search.generations << " generations\n";
  std::cout << "best: " << kind_name(result.best.spec.kind) << " (id "
            << result.best.id << ") fitness "
            << format_double(result.best.fitness.value_or(0.0)) << "\n";
  std::cout << "archive written to "
            << (fs::path(config.out_dir) / "archive.jsonl").string() << "\n";
  return 0;
}

namespace {

struct GradCheckStats {
  std::size_t count = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::size_t worst_index = 0;

  void update(std::size_t index, double analytic, double numeric) {
    const double abs_dev = std::fabs(analytic - numeric);
    const double denom = std::max(std::fabs(analytic), std::fabs(numeric));
    if (abs_dev > max_abs) {
      max_abs = abs_dev;
      worst_index = index;
    }
    if (denom > 1e-6) max_rel = std::max(max_rel, abs_dev / denom);
    ++count;
  }
};

void gradcheck_logit(LogitModel& model, std::span<const double> features,
                     int label, const GradOptions& opts, GradCheckStats& stats) {
  const auto [loss, analytic] = model.loss_and_grad(features, label, opts);
  (void)loss;
  std::vector<double> params = model.parameters();
  const double eps = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + eps;
    model.set_parameters(params);
    const double plus = softmax_cross_entropy(model.logits(features), label).first;
    params[k] = saved - eps;
    model.set_parameters(params);
    const double minus = softmax_cross_entropy(model.logits(features), label).first;
    params[k] = saved;
    stats.update(k, analytic[k], (plus - minus) / (2 * eps));
  }
  model.set_parameters(params);
}

void gradcheck_ff(const ModelSpec& spec, std::span<const double> features,
                  const GradOptions& opts, GradCheckStats& stats) {
  // One SGD step at lr 1 exposes the analytic gradient of each layer as
  // (params before - params after); finite differences probe the same
  // pair loss through layer_goodness.
  Rng pair_rng(spec.seed ^ 0x51ed2701);
  std::vector<double> negative(features.size());
  for (double& f : negative) f = pair_rng.uniform(0.0, std::numbers::pi);
  std::vector<std::vector<double>> pos = {
      std::vector<double>(features.begin(), features.end())};
  std::vector<std::vector<double>> neg = {std::move(negative)};

  const auto model = build_model(spec);
  auto& ff = as_ff(*model);
  std::size_t offset = 0;
  for (int layer = 0; layer < ff.num_layers(); ++layer) {
    ff.set_optimizer(OptimizerKind::SGD);
    const std::vector<double> before = model->parameters();
    ff.ff_train_step(layer, pos, neg, 1.0, opts);
    const std::vector<double> after = model->parameters();

    const auto loss_at = [&](const std::vector<double>& params) {
      model->set_parameters(params);
      const double g_pos = ff.layer_goodness(layer, pos.front());
      const double g_neg = ff.layer_goodness(layer, neg.front());
      return ff_loss(g_pos, g_neg, spec.ff_threshold);
    };
    std::vector<double> probe = before;
    const std::size_t layer_size = ff.layer_parameter_count(layer);
    for (std::size_t k = offset; k < offset + layer_size; ++k) {
      const double saved = probe[k];
      probe[k] = saved + 1e-5;
      const double plus = loss_at(probe);
      probe[k] = saved - 1e-5;
      const double minus = loss_at(probe);
      probe[k] = saved;
      stats.update(k, before[k] - after[k], (plus - minus) / 2e-5);
    }
    model->set_parameters(before);

    pos = {ff.layer_transform(layer, pos.front())};
    neg = {ff.layer_transform(layer, neg.front())};
    offset += layer_size;
  }
}

}  // namespace

int cmd_gradcheck(const RunConfig& config) {
  constexpr double kTolerance = 1e-4;
  GradOptions opts;
  if (config.corrupt_shift) {
    opts.shift = kParamShift * 1.05;
    std::cout << "running with a corrupted shift constant (negative control)\n";
  }

  Rng rng(config.spec.seed);
  std::vector<double> features(
      std::min<std::size_t>(kPooledFeatures,
                            static_cast<std::size_t>(2 * config.spec.num_qubits)));
  for (double& f : features) f = rng.uniform(0.0, std::numbers::pi);
  const int label = static_cast<int>(rng.uniform_int(10));

  const auto model = build_model(config.spec);
  GradCheckStats stats;
  if (auto* logit = dynamic_cast<LogitModel*>(model.get())) {
    gradcheck_logit(*logit, features, label, opts, stats);
  } else {
    gradcheck_ff(config.spec, features, opts, stats);
  }

  std::cout << "model " << kind_name(config.spec.kind) << ": " << stats.count
            << " parameters checked\n";
  std::cout << "max abs deviation " << format_double(stats.max_abs)
            << ", max rel deviation " << format_double(stats.max_rel) << "\n";
  if (stats.max_abs >= kTolerance) {
    std::cerr << "gradcheck FAILED: parameter " << stats.worst_index
              << " deviates by " << format_double(stats.max_abs) << " (tolerance "
              << format_double(kTolerance) << ")\n";
    return 2;
  }
  std::cout << "gradcheck passed (tolerance " << format_double(kTolerance) << ")\n";
  return 0;
}

int run_command(int (*command)(const RunConfig&), const FlagValues& flags) {
  try {
    const RunConfig config = make_run_config(flags);
    return command(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qml::cli
