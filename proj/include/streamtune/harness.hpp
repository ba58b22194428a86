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

// Corpus handling, training-data generation, cross-validated evaluation and
// report emission.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamtune/core.hpp"
#include "streamtune/kerneldsl.hpp"
#include "streamtune/perfmodel.hpp"
#include "streamtune/search.hpp"
#include "streamtune/simulator.hpp"

namespace streamtune {

/// One kernel under one parameter binding.
struct Workload {
  std::string id;     // "<kernel>/<binding index>"
  std::string group;  // kernel name; cross-validation holds out whole groups
  KernelSpec kernel;
  ParamMap params;
};

struct Corpus {
  std::vector<Workload> workloads;
  PlatformSpec platform;
  ConfigGrid grid;
  NoiseSpec noise{0.02, 1};
  int max_runs = 10;
  /// Extra groups held out together with a group (paired variants).
  std::map<std::string, std::vector<std::string>> siblings;

  /// Throws SchemaError on duplicate ids, DomainError on bad settings.
  void validate() const;
};

/// Reads DIR/manifest. Each line is "workload <kernel file> NAME=VALUE ...",
/// "platform <platform file>" or "siblings <group> <group> ...". File paths
/// are relative to DIR. Without a platform line the default PlatformSpec is used.
Corpus load_corpus(const std::string& dir);

/// Static features plus profiled dynamic features.
FeatureVector workload_features(const Workload& w, const PlatformSpec& platform);

/// Per-axis strided sub-grid (both axes start at their lower bound).
std::vector<StreamConfig> strided_configs(const ConfigGrid& grid, int stride);

struct OracleEntry {
  std::string workload_id;
  StreamConfig config{1, 1};
  double speedup = 1.0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<OracleEntry> oracles;  // argmax over each workload's rows
};

/// Seed of the noisy measurement of one workload at one configuration.
std::uint64_t measurement_seed(std::uint64_t base, const std::string& workload_id, StreamConfig config);

/// Measured speedup of one row: mean single-stream runtime over mean runtime
/// at the configuration.
double measured_speedup(const Corpus& corpus, const Workload& w, StreamConfig config);

/// Workloads that cannot host a configuration are skipped with a warning on
/// `log` (when given).
Dataset gen_training_data(const Corpus& corpus, int stride, int jobs = 1, std::ostream* log = nullptr);

void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples);
std::vector<Sample> read_dataset_csv(std::istream& in);

/// Noise-free exhaustive sweep.
struct GridOracle {
  StreamConfig best{1, 1};
  double best_speedup = 1.0;
  double single_time = 0.0;
};

GridOracle sweep_oracle(const Workload& w, const Corpus& corpus);

/// Noise-free speedup of a configuration.
double true_speedup(const Workload& w, const Corpus& corpus, StreamConfig config);

/// Cross-validation training budget. Each fold trains on a row subsample so
/// a full leave-one-out run takes minutes rather than hours.
inline constexpr std::size_t kEvalTrainRows = 20000;
inline constexpr int kEvalEpochs = 100;
inline constexpr double kEvalLearningRate = 0.003;

inline TrainConfig eval_train_config() {
  TrainConfig c;
  c.learning_rate = kEvalLearningRate;
  c.epochs = kEvalEpochs;
  return c;
}

struct EvalOptions {
  MlpSpec mlp;
  TrainConfig train = eval_train_config();
  /// Training rows kept per fold (deterministic subsample); 0 keeps all.
  std::size_t max_train_rows = kEvalTrainRows;
  std::uint64_t subsample_seed = 11;
  int jobs = 1;
};

struct ComparatorCell {
  StreamConfig config{1, 1};
  double speedup = 1.0;
  double percent = 100.0;
  bool fallback = false;
};

struct EvalRow {
  std::string workload_id;
  StreamConfig oracle_config{1, 1};
  double oracle_speedup = 1.0;
  StreamConfig chosen{1, 1};
  double achieved_speedup = 1.0;
  double percent = 100.0;
  bool fold_failed = false;
  std::vector<ComparatorCell> comparators;  // parallel to EvalReport::comparator_names
};

struct EvalReport {
  std::vector<std::string> comparator_names;
  std::vector<EvalRow> rows;

  friend bool operator==(const EvalReport&, const EvalReport&);
};

bool operator==(const ComparatorCell&, const ComparatorCell&);
bool operator==(const EvalRow&, const EvalRow&);

/// Deterministic subsample of at most n rows (all rows when n is 0 or larger
/// than the input), original order preserved.
std::vector<Sample> subsample(const std::vector<Sample>& rows, std::size_t n, std::uint64_t seed);

/// Groups excluded from training when `group` is under test.
std::vector<std::string> held_out_groups(const Corpus& corpus, const std::string& group);

/// Leave-one-group-out evaluation. Fold failures are recorded in the row.
/// Training rows of the fold that holds out `group` and its siblings.
std::vector<Sample> fold_training_set(const Corpus& corpus, const Dataset& data, const std::string& group,
                                      const EvalOptions& options);

/// Throws InvariantError if `training` holds a row of `group` or its siblings.
void audit_fold(const Corpus& corpus, const std::string& group, const std::vector<Sample>& training);

EvalReport loocv(const Corpus& corpus, const Dataset& data, const EvalOptions& options,
                 std::ostream* log = nullptr);

inline constexpr const char* kLiuName = "liu";
inline constexpr const char* kWerkhovenName = "werkhoven";

/// Configuration picked by a named comparator (liu, werkhoven or a fixed
/// configuration). Sets *fallback when the analytical model had no answer.
StreamConfig comparator_config(const std::string& name, const Workload& w, const Corpus& corpus, bool* fallback);

/// Appends liu, werkhoven and the fixed configurations. The oracle of a row
/// is raised when a comparator's configuration lies outside the grid and
/// beats it.
EvalReport compare_baselines(const Corpus& corpus, const EvalReport& model_report, int jobs = 1);

struct ColumnSummary {
  std::string name;
  double geomean_speedup = 0.0;
  double mean_percent = 0.0;
  double geomean_percent = 0.0;
  std::vector<double> percentiles;  // at kReportPercentiles
};

inline constexpr double kReportPercentiles[] = {10, 25, 50, 75, 90};

/// Model column first, then one summary per comparator.
std::vector<ColumnSummary> summarize(const EvalReport& report);

/// Linear interpolation between closest ranks.
double percentile(std::vector<double> values, double q);

enum class ReportFormat { kCsv, kText };

ReportFormat parse_report_format(const std::string& name);
void emit_report(std::ostream& out, const EvalReport& report, ReportFormat format);
EvalReport read_report_csv(std::istream& in);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace streamtune
