#include "qmllab/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "json_detail.hpp"
#include "qmllab/errors.hpp"
#include "qmllab/losses.hpp"
#include "qmllab/parallel.hpp"

namespace qml {

using detail::ojson;

void validate_train_config(const TrainConfig& config) {
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
}

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::SGD ? "sgd" : "adam";
}

OptimizerKind optimizer_from_name(std::string_view name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adam") return OptimizerKind::Adam;
  throw ParseError("unknown optimizer: '" + std::string(name) + "'");
}

std::string report_to_json(const TrainReport& report, bool pretty) {
  ojson j;
  j["epoch_loss"] = report.epoch_loss;
  j["epoch_train_accuracy"] = report.epoch_train_accuracy;
  j["final_train_accuracy"] = report.final_train_accuracy;
  j["final_test_accuracy"] = report.final_test_accuracy;
  return j.dump(pretty ? 2 : -1);
}

namespace detail {

ojson train_config_to_ojson(const TrainConfig& config) {
  ojson j;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["learning_rate"] = config.learning_rate;
  j["optimizer"] = optimizer_name(config.optimizer);
  j["seed"] = config.seed;
  j["shuffle"] = config.shuffle;
  return j;
}

TrainConfig train_config_from_ojson(const ojson& j) {
  if (!j.is_object()) throw ParseError("train config must be a JSON object");
  static const char* const known[] = {"epochs", "batch_size", "learning_rate",
                                      "optimizer", "seed", "shuffle"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError("unknown train config field: '" + key + "'");
  }
  for (const char* k : known) {
    if (!j.contains(k)) {
      throw ParseError(std::string("missing train config field: '") + k + "'");
    }
  }
  TrainConfig config;
  config.epochs = require_int(j, "epochs");
  config.batch_size = require_int(j, "batch_size");
  if (!j.at("learning_rate").is_number()) {
    throw ParseError("field 'learning_rate' must be a number");
  }
  config.learning_rate = j.at("learning_rate").get<double>();
  if (!j.at("optimizer").is_string()) {
    throw ParseError("field 'optimizer' must be a string");
  }
  config.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  const auto& seed = j.at("seed");
  if (!seed.is_number_integer() && !seed.is_number_unsigned()) {
    throw ParseError("field 'seed' must be an integer");
  }
  config.seed = seed.get<std::uint64_t>();
  if (!j.at("shuffle").is_boolean()) {
    throw ParseError("field 'shuffle' must be a boolean");
  }
  config.shuffle = j.at("shuffle").get<bool>();
  try {
    validate_train_config(config);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid train config: ") + e.what());
  }
  return config;
}

}  // namespace detail

std::string train_config_to_json(const TrainConfig& config, bool pretty) {
  return detail::train_config_to_ojson(config).dump(pretty ? 2 : -1);
}

TrainConfig train_config_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed train config: ") + e.what());
  }
  return detail::train_config_from_ojson(j);
}

std::string canonical_train_config(const TrainConfig& config) {
  return detail::train_config_to_ojson(config).dump();
}

double evaluate(const Model& model, std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("evaluate needs at least one sample");
  std::vector<char> correct(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t i) {
    correct[i] = model.predict(samples[i].features) == samples[i].label ? 1 : 0;
  });
  std::size_t hits = 0;
  for (char c : correct) hits += static_cast<std::size_t>(c);
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) rng.shuffle(order);
  return order;
}

double train_logit_epoch(LogitModel& model, std::span<const Sample> samples,
                         std::span<const std::size_t> order,
                         const TrainConfig& config, std::vector<double>& params,
                         OptimizerState& opt) {
  double loss_sum = 0.0;
  const std::size_t n = order.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
    const std::size_t batch = end - start;

    std::vector<double> losses(batch);
    std::vector<std::vector<double>> grads(batch);
    parallel_for(batch, [&](std::size_t b) {
      const Sample& sample = samples[order[start + b]];
      auto [loss, grad] = model.loss_and_grad(sample.features, sample.label);
      losses[b] = loss;
      grads[b] = std::move(grad);
    });

    std::vector<double> mean_grad(params.size(), 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      loss_sum += losses[b];
      for (std::size_t k = 0; k < mean_grad.size(); ++k) mean_grad[k] += grads[b][k];
    }
    const double inv = 1.0 / static_cast<double>(batch);
    for (double& g : mean_grad) g *= inv;

    optimizer_step(opt, params, mean_grad);
    model.set_parameters(params);
  }
  return loss_sum / static_cast<double>(n);
}

double train_ff_epoch(FfModel& model, std::span<const Sample> samples,
                      std::span<const std::size_t> order,
                      const TrainConfig& config, Rng& negative_rng) {
  double loss_sum = 0.0;
  const std::size_t n = order.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
    const std::size_t batch = end - start;

    std::vector<std::vector<double>> positive(batch);
    std::vector<std::vector<double>> negative(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const Sample& sample = samples[order[start + b]];
      positive[b] = overlay_label(sample.features, sample.label);
      negative[b] = make_negative(sample, negative_rng).features;
    }

    for (int layer = 0; layer < model.num_layers(); ++layer) {
      const double layer_loss = model.ff_train_step(layer, positive, negative,
                                                    config.learning_rate);
      loss_sum += layer_loss * static_cast<double>(batch);
      if (layer + 1 < model.num_layers()) {
        std::vector<std::vector<double>> next_pos(batch), next_neg(batch);
        parallel_for(batch, [&](std::size_t b) {
          next_pos[b] = model.layer_transform(layer, positive[b]);
          next_neg[b] = model.layer_transform(layer, negative[b]);
        });
        positive = std::move(next_pos);
        negative = std::move(next_neg);
      }
    }
  }
  return loss_sum / static_cast<double>(n);
}

}  // namespace

TrainReport train(Model& model, const DatasetSplit& split, const TrainConfig& config) {
  validate_train_config(config);
  if (split.train.empty() || split.test.empty()) {
    throw InputError("train and test partitions must both be nonempty");
  }

  const auto start_time = std::chrono::steady_clock::now();
  TrainReport report;
  report.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
  report.epoch_train_accuracy.reserve(static_cast<std::size_t>(config.epochs));

  Rng shuffle_rng(config.seed);
  auto* ff = dynamic_cast<FfModel*>(&model);
  auto* logit = dynamic_cast<LogitModel*>(&model);
  if (ff == nullptr && logit == nullptr) {
    throw ConfigError("model supports neither training path");
  }

  std::vector<double> params;
  OptimizerState opt;
  Rng negative_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  if (ff != nullptr) {
    ff->set_optimizer(config.optimizer);
  } else {
    params = logit->parameters();
    opt = make_optimizer(config.optimizer, config.learning_rate, params.size());
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order =
        epoch_order(split.train.size(), config.shuffle, shuffle_rng);
    const double epoch_loss =
        ff != nullptr
            ? train_ff_epoch(*ff, split.train, order, config, negative_rng)
            : train_logit_epoch(*logit, split.train, order, config, params, opt);
    if (!std::isfinite(epoch_loss)) {
      throw Error("training diverged: non-finite loss at epoch " +
                  std::to_string(epoch + 1));
    }
    report.epoch_loss.push_back(epoch_loss);
    report.epoch_train_accuracy.push_back(evaluate(model, split.train));
  }

  report.final_train_accuracy = report.epoch_train_accuracy.back();
  report.final_test_accuracy = evaluate(model, split.test);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

}  // namespace qml
