#include "qmllab/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "qmllab/errors.hpp"

namespace qml {

namespace {

constexpr double kMaxPixel = 16.0;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<Sample> load_digits(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open dataset file: " + path);
  }
  std::vector<Sample> samples;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != kRawFeatures + 1) {
      throw ParseError("row " + std::to_string(row) + ": expected 65 fields, got " +
                       std::to_string(fields.size()));
    }
    Sample sample;
    sample.stage = FeatureStage::Raw;
    sample.features.reserve(kRawFeatures);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      long value = 0;
      std::size_t consumed = 0;
      try {
        value = std::stol(fields[i], &consumed);
      } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ": field " +
                         std::to_string(i) + " is not an integer: '" + fields[i] + "'");
      }
      if (consumed != fields[i].size()) {
        throw ParseError("row " + std::to_string(row) + ": field " +
                         std::to_string(i) + " is not an integer: '" + fields[i] + "'");
      }
      if (i < kRawFeatures) {
        if (value < 0 || value > 16) {
          throw ValidationError("row " + std::to_string(row) + ": pixel " +
                                std::to_string(i) + " = " + std::to_string(value) +
                                " outside [0, 16]");
        }
        sample.features.push_back(static_cast<double>(value));
      } else {
        if (value < 0 || value >= kNumClasses) {
          throw ValidationError("row " + std::to_string(row) + ": label " +
                                std::to_string(value) + " outside [0, 9]");
        }
        sample.label = static_cast<int>(value);
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<double> pool_features(std::span<const double> raw) {
  if (raw.size() != kRawFeatures) {
    throw ShapeError("pooling expects 64 values, got " + std::to_string(raw.size()));
  }
  std::vector<double> pooled(kPooledFeatures);
  for (int br = 0; br < 4; ++br) {
    for (int bc = 0; bc < 4; ++bc) {
      const int r = 2 * br, c = 2 * bc;
      const double sum = raw[static_cast<std::size_t>(8 * r + c)] +
                         raw[static_cast<std::size_t>(8 * r + c + 1)] +
                         raw[static_cast<std::size_t>(8 * (r + 1) + c)] +
                         raw[static_cast<std::size_t>(8 * (r + 1) + c + 1)];
      pooled[static_cast<std::size_t>(4 * br + bc)] = sum / 4.0;
    }
  }
  return pooled;
}

std::vector<double> normalize_to_angles(std::span<const double> pooled) {
  std::vector<double> angles(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i] < 0.0 || pooled[i] > kMaxPixel) {
      throw ValidationError("feature " + std::to_string(i) + " = " +
                            std::to_string(pooled[i]) + " outside [0, 16]");
    }
    angles[i] = pooled[i] * std::numbers::pi / kMaxPixel;
  }
  return angles;
}

Sample pool_sample(const Sample& sample) {
  if (sample.stage != FeatureStage::Raw) {
    throw ValidationError("pool_sample requires a raw sample");
  }
  return Sample{pool_features(sample.features), sample.label, FeatureStage::Pooled};
}

Sample encode_sample(const Sample& sample) {
  if (sample.stage != FeatureStage::Pooled) {
    throw ValidationError("encode_sample requires a pooled sample");
  }
  return Sample{normalize_to_angles(sample.features), sample.label,
                FeatureStage::Encoded};
}

std::vector<Sample> encode_dataset(const std::vector<Sample>& raw) {
  std::vector<Sample> encoded;
  encoded.reserve(raw.size());
  for (const Sample& s : raw) encoded.push_back(encode_sample(pool_sample(s)));
  return encoded;
}

DatasetSplit split(const std::vector<Sample>& samples, double ratio,
                   std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) {
    throw InputError("split ratio must be in (0, 1)");
  }
  if (samples.size() < 2) {
    throw InputError("need at least 2 samples to split");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t train_count =
      static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) * ratio));
  if (train_count == 0 || train_count == samples.size()) {
    throw InputError("split produces an empty partition");
  }
  DatasetSplit out;
  out.seed = seed;
  out.ratio = ratio;
  out.train.reserve(train_count);
  out.test.reserve(samples.size() - train_count);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (i < train_count ? out.train : out.test).push_back(samples[order[i]]);
  }
  return out;
}

std::vector<double> overlay_label(std::span<const double> features, int label) {
  if (label < 0 || label >= kNumClasses) {
    throw InputError("overlay label " + std::to_string(label) + " outside [0, 9]");
  }
  if (features.size() < kNumClasses) {
    throw ShapeError("overlay needs at least 10 feature slots");
  }
  std::vector<double> out(features.begin(), features.end());
  for (int c = 0; c < kNumClasses; ++c) {
    out[static_cast<std::size_t>(c)] = (c == label) ? std::numbers::pi : 0.0;
  }
  return out;
}

Sample make_negative(const Sample& sample, Rng& rng) {
  // Uniform over the 9 wrong classes.
  int wrong = static_cast<int>(rng.uniform_int(kNumClasses - 1));
  if (wrong >= sample.label) ++wrong;
  return Sample{overlay_label(sample.features, wrong), wrong, sample.stage};
}

}  // namespace qml
