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

#include "streamtune/search.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace streamtune {

namespace {

int parse_bound(std::string_view text, std::string_view whole) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("bad range '" + std::string(whole) + "', expected A..B", 0, 0);
  }
  return v;
}

bool ranks_before(const RankedConfig& a, const RankedConfig& b) {
  if (a.predicted != b.predicted) return a.predicted > b.predicted;
  return a.config < b.config;
}

}  // namespace

IntRange parse_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const int v = parse_bound(text, text);
    return {v, v};
  }
  return {parse_bound(text.substr(0, dots), text), parse_bound(text.substr(dots + 2), text)};
}

void ConfigGrid::validate() const {
  if (partitions.lo < 1 || tasks.lo < 1) throw DomainError("grid bounds must be >= 1");
  if (partitions.lo > partitions.hi || tasks.lo > tasks.hi) throw DomainError("grid ranges must be non-empty");
}

std::vector<StreamConfig> enumerate(const ConfigGrid& grid) {
  grid.validate();
  std::vector<StreamConfig> out;
  for (int p = grid.partitions.lo; p <= grid.partitions.hi; ++p) {
    for (int t = std::max(p, grid.tasks.lo); t <= grid.tasks.hi; ++t) out.emplace_back(p, t);
  }
  return out;
}

std::vector<RankedConfig> rank_with(const Predictor& predict, const std::vector<StreamConfig>& candidates,
                                    std::size_t top_k) {
  if (top_k < 1) throw DomainError("top_k must be >= 1");
  std::vector<RankedConfig> all;
  all.reserve(candidates.size());
  for (const auto& c : candidates) {
    const double v = predict(c);
    if (std::isnan(v)) throw InvariantError("model predicted NaN for " + c.to_string());
    all.push_back({c, v});
  }
  const std::size_t k = std::min(top_k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.erase(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  return all;
}

std::vector<RankedConfig> rank(const PerfModel& model, const FeatureVector& raw, const ConfigGrid& grid,
                               std::size_t top_k) {
  const std::vector<double> workload = model.encode_workload(raw);
  return rank_with([&](StreamConfig c) { return model.predict_speedup(workload, c); }, enumerate(grid), top_k);
}

StreamConfig tune(const PerfModel& model, const FeatureVector& raw, const ConfigGrid& grid) {
  const auto top = rank(model, raw, grid, 1);
  if (top.empty()) throw DomainError("configuration grid is empty after filtering");
  return top.front().config;
}

}  // namespace streamtune
