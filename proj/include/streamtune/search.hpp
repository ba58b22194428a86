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

// Configuration space enumeration and model-driven ranking.

#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "streamtune/core.hpp"
#include "streamtune/perfmodel.hpp"

namespace streamtune {

struct IntRange {
  int lo = 1;
  int hi = 1;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Parses "A..B" (or a single "A"). Throws ParseError.
IntRange parse_range(std::string_view text);

struct ConfigGrid {
  IntRange partitions{1, 224};
  IntRange tasks{1, 256};

  /// Throws DomainError on empty ranges or bounds below 1.
  void validate() const;
};

/// Feasible configurations (tasks >= partitions), partitions major.
std::vector<StreamConfig> enumerate(const ConfigGrid& grid);

struct RankedConfig {
  StreamConfig config;
  double predicted = 0.0;
};

using Predictor = std::function<double(StreamConfig)>;

/// Orders by predicted value descending, then partitions and tasks
/// ascending; keeps the first min(top_k, candidates) entries.
std::vector<RankedConfig> rank_with(const Predictor& predict, const std::vector<StreamConfig>& candidates,
                                    std::size_t top_k);

std::vector<RankedConfig> rank(const PerfModel& model, const FeatureVector& raw, const ConfigGrid& grid,
                               std::size_t top_k);

/// Top-ranked configuration. Throws DomainError on an empty grid.
StreamConfig tune(const PerfModel& model, const FeatureVector& raw, const ConfigGrid& grid);

}  // namespace streamtune
