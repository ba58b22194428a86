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

#include "streamtune/core.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

namespace streamtune {

StreamConfig::StreamConfig(int partitions, int tasks) : partitions_(partitions), tasks_(tasks) {
  if (partitions < 1 || tasks < 1) {
    throw DomainError("stream config needs partitions >= 1 and tasks >= 1, got " + to_string());
  }
  if (tasks < partitions) {
    throw DomainError("stream config needs tasks >= partitions, got " + to_string());
  }
}

std::string StreamConfig::to_string() const {
  return "(" + std::to_string(partitions_) + "," + std::to_string(tasks_) + ")";
}

void PlatformSpec::validate() const {
  if (total_cores < 1) throw DomainError("platform total_cores must be >= 1");
  const double costs[] = {h2d_bandwidth,     d2h_bandwidth,    transfer_latency,
                          context_init_cost, stream_mgmt_cost, thread_spawn_cost,
                          branch_miss_penalty, l1_miss_penalty};
  for (double c : costs) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("platform cost fields must be finite and >= 0");
  }
  if (!(core_instruction_rate > 0.0) || !std::isfinite(core_instruction_rate)) {
    throw DomainError("platform core_instruction_rate must be > 0");
  }
}

double speedup(double t_single, double t_config) {
  if (!(t_single > 0.0) || !(t_config > 0.0)) {
    throw DomainError("speedup needs positive times");
  }
  return t_single / t_config;
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("geometric mean of an empty list");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw DomainError("geometric mean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

double confidence_gap(std::span<const double> samples, double level) {
  const std::size_t n = samples.size();
  if (n < 2) throw InsufficientDataError("confidence interval needs at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must be in (0,1)");

  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  if (ss == 0.0) return 0.0;
  if (mean == 0.0) throw DomainError("relative confidence gap undefined for zero mean");

  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  const double half_width = t * stddev / std::sqrt(static_cast<double>(n));
  return 2.0 * half_width / std::abs(mean);
}

}  // namespace streamtune
