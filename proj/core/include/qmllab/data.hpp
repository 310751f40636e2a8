#pragma once

#include <span>
#include <string>
#include <vector>

#include "qmllab/rng.hpp"

namespace qml {

inline constexpr int kNumClasses = 10;
inline constexpr int kRawFeatures = 64;     // 8x8 pixels, values in [0, 16]
inline constexpr int kPooledFeatures = 16;  // 4x4 after 2x2 average pooling

// Processing stage a sample's feature vector is in. Stage transitions are
// checked so a vector can never be pooled or normalized twice.
enum class FeatureStage { Raw, Pooled, Encoded };

struct Sample {
  std::vector<double> features;
  int label = 0;
  FeatureStage stage = FeatureStage::Raw;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
  double ratio = 0.75;
};

// Parses the digits CSV: 65 comma-separated integers per row (64 pixels in
// 0..16, then the label 0..9), no header, LF or CRLF line endings.
std::vector<Sample> load_digits(const std::string& path);

// Non-overlapping 2x2 average pooling of a row-major 8x8 image.
std::vector<double> pool_features(std::span<const double> raw);

// x -> x * pi / 16; inputs must lie in [0, 16].
std::vector<double> normalize_to_angles(std::span<const double> pooled);

Sample pool_sample(const Sample& sample);
Sample encode_sample(const Sample& sample);

// Raw -> Pooled -> Encoded for every sample.
std::vector<Sample> encode_dataset(const std::vector<Sample>& raw);

// Seeded shuffle then partition; train gets floor(ratio * n) samples.
DatasetSplit split(const std::vector<Sample>& samples, double ratio,
                   std::uint64_t seed);

// Copy of `features` with slots 0..9 replaced by one_hot(label) * pi.
std::vector<double> overlay_label(std::span<const double> features, int label);

// Same image features, overlay of a uniformly chosen wrong label; the
// returned label field records the wrong label.
Sample make_negative(const Sample& sample, Rng& rng);

}  // namespace qml
