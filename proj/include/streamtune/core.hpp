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

// Domain types shared by every module: stream configurations, platform
// descriptions, timing breakdowns, raw feature vectors and training samples,
// plus the handful of summary statistics used in evaluation.

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "streamtune/errors.hpp"

namespace streamtune {

/// A candidate (#partitions, #tasks) pair. Every partition hosts at least one
/// task, so construction rejects tasks < partitions.
class StreamConfig {
 public:
  StreamConfig(int partitions, int tasks);

  int partitions() const noexcept { return partitions_; }
  int tasks() const noexcept { return tasks_; }

  std::string to_string() const;

  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
  friend auto operator<=>(const StreamConfig&, const StreamConfig&) = default;

 private:
  int partitions_;
  int tasks_;
};

/// Simulated host/accelerator platform. Bandwidths are seconds per byte,
/// costs are seconds.
struct PlatformSpec {
  int total_cores = 224;
  double h2d_bandwidth = 0.0;
  double d2h_bandwidth = 0.0;
  double transfer_latency = 0.0;
  // false: one shared DMA channel for both directions; true: one per direction.
  bool bidirectional_overlap = false;
  double context_init_cost = 0.0;  // per partition
  double stream_mgmt_cost = 0.0;   // per stream
  double thread_spawn_cost = 0.0;  // per core per parallel-region launch
  double core_instruction_rate = 1.0e9;  // instructions per second per core
  double branch_miss_penalty = 0.0;      // fractional slowdown per unit miss rate
  double l1_miss_penalty = 0.0;

  /// Throws DomainError if any field is out of range.
  void validate() const;

  friend bool operator==(const PlatformSpec&, const PlatformSpec&) = default;
};

/// Execution time breakdown T = Tm + Tk + Tc - To.
struct TimingBreakdown {
  double total = 0.0;
  double transfer = 0.0;
  double kernel = 0.0;
  double context = 0.0;
  double overlap = 0.0;

  friend bool operator==(const TimingBreakdown&, const TimingBreakdown&) = default;
};

inline constexpr std::size_t kRawFeatureCount = 10;

/// Column names of the raw feature vector, in declaration order.
inline constexpr std::array<std::string_view, kRawFeatureCount> kRawFeatureNames = {
    "loop_nest",     "loop_count",   "xfer_mem",    "dts",         "redundant_transfer_size",
    "max_blocks",    "min_task_unit", "instructions", "branch_miss", "l1_dcr"};

/// Raw, unscaled feature values of one workload.
struct FeatureVector {
  std::array<double, kRawFeatureCount> values{};

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// One training observation: a workload's features under one configuration.
struct Sample {
  std::string workload_id;
  FeatureVector features;
  StreamConfig config{1, 1};
  double speedup = 1.0;
};

/// t_single / t_config. Throws DomainError on non-positive input.
double speedup(double t_single, double t_config);

/// exp(mean(log v)). Throws DomainError on an empty list or non-positive entry.
double geometric_mean(std::span<const double> values);

/// Width of the two-sided Student-t confidence interval of the mean, relative
/// to the mean: (upper - lower) / mean. Zero for zero-variance samples.
/// Throws InsufficientDataError for fewer than two samples.
double confidence_gap(std::span<const double> samples, double level = 0.95);

}  // namespace streamtune
