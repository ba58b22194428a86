// Copyright 2026 The streamtune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Regression performance model: an MLP that maps engineered workload
// features plus a stream configuration to a normalized speedup.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamtune/core.hpp"
#include "streamtune/featureng.hpp"

namespace streamtune {

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden = {9, 9, 9};
  std::uint64_t init_seed = 1;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 2000;
  std::size_t batch_size = 32;
  std::uint64_t shuffle_seed = 7;

  void validate() const;
};

/// Fully connected tanh network with a single linear output unit. All weights
/// live in one flat vector: per layer the row-major weight matrix, then the
/// bias vector.
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights drawn from spec.init_seed, zero biases.
  explicit Mlp(const MlpSpec& spec);

  static Mlp zeros(const MlpSpec& spec);

  std::size_t input_dim() const { return widths_.empty() ? 0 : widths_.front(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Throws SchemaError on a dimension mismatch.
  double forward(std::span<const double> x) const;

  /// Squared error (y - target)^2 at one sample; adds its gradient into `grad`
  /// (which must hold parameters().size() entries).
  double accumulate_gradient(std::span<const double> x, double target, std::span<double> grad) const;

  /// Adam on mean squared error. Returns the mean training loss of each epoch.
  std::vector<double> fit(std::span<const double> inputs, std::span<const double> targets,
                          const TrainConfig& config);

  static Mlp from_parts(std::vector<std::size_t> widths, std::vector<double> params);

 private:
  std::vector<std::size_t> widths_;  // input, hidden..., 1
  std::vector<double> params_;
};

/// Max relative difference between backprop and central finite differences
/// of the squared error over every parameter.
double gradient_check(const Mlp& mlp, std::span<const double> x, double target, double h = 1e-5);

/// log1p, applied to every raw feature before selection and scaling. Byte
/// and instruction counts span many orders of magnitude.
double compress_feature(double v);

struct ModelMetadata {
  std::uint64_t corpus_hash = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t sample_count = 0;
};

/// Trained pipeline: selection, z-score, PCA, configuration encoding, MLP and
/// the inverse target scaling.
class PerfModel {
 public:
  std::vector<std::string> kept_features;
  Scaler feature_scaler;
  PcaBasis pca;
  Scaler config_scaler;  // over log2(partitions), log2(tasks)
  Scaler target_scaler;  // min-max over log(speedup)
  Eigen::VectorXd importance;  // Varimax importance per kept feature
  Mlp mlp;
  ModelMetadata metadata;

  /// Workload half of the model input (PCA coordinates). Rankings reuse it
  /// across configurations.
  std::vector<double> encode_workload(const FeatureVector& raw) const;
  /// Writes the full model input for one configuration into `input`.
  void encode(std::span<const double> workload, StreamConfig config, std::span<double> input) const;

  double predict_normalized(std::span<const double> workload, StreamConfig config) const;
  /// Speedup on the original scale, floored at kSpeedupFloor.
  double predict_speedup(std::span<const double> workload, StreamConfig config) const;
  double predict_speedup(const FeatureVector& raw, StreamConfig config) const;
};

inline constexpr double kSpeedupFloor = 1e-6;

struct TrainResult {
  PerfModel model;
  std::vector<double> loss_history;
};

/// Needs at least 10 samples per model input. Throws InsufficientDataError
/// otherwise.
TrainResult train(std::span<const Sample> samples, const MlpSpec& mlp_spec, const TrainConfig& config);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const PerfModel& model, const std::string& path);
PerfModel load_model(const std::string& path);
std::vector<std::uint8_t> serialize_model(const PerfModel& model);
/// Throws FormatError on bad magic, truncation or checksum mismatch and
/// VersionError on an unsupported version.
PerfModel deserialize_model(std::span<const std::uint8_t> bytes);

/// FNV-1a over the rows, order-sensitive.
std::uint64_t hash_samples(std::span<const Sample> samples);

}  // namespace streamtune
