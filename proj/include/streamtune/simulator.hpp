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

// Deterministic simulator of streamed host/accelerator execution.
//
// A run with configuration (p, t) proceeds as follows:
//
//  * Context setup of context_init_cost * p + stream_mgmt_cost * t is charged
//    once, before any task starts.
//  * The partitioned loop is cut into t contiguous chunks of ceil(L / t)
//    iterations (the last one truncated, trailing chunks may be empty).
//    Task i runs on partition i mod p.
//  * Each task issues one host-to-device call per transferred input array and
//    one device-to-host call per transferred output array. A call costs
//    transfer_latency + bytes * bandwidth and occupies a DMA channel; there is
//    one channel shared by both directions, or one per direction when
//    bidirectional_overlap is set. Channels serve requests first-come
//    first-served, ties broken by task id.
//  * A partition owns floor(total_cores / p) cores and runs its tasks one at a
//    time, in arrival order. A task computes once its inputs have arrived and
//    the partition is free; its outputs are requested when compute ends.
//  * Compute time is the chunk's instruction count over the partition's
//    instruction throughput, plus thread_spawn_cost * cores * ceil(O / t)
//    where O is the trip count of the loops enclosing the partitioned loop.
//
// Reported breakdown: Tm is the sum of all call durations, Tk the wall time
// during which at least one partition computes, Tc the context cost, T the
// completion time of the last call, and To = Tm + Tk + Tc - T. Every duration
// is snapped to a 2^-40 s grid so that the identity holds exactly in binary
// floating point.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamtune/core.hpp"
#include "streamtune/kerneldsl.hpp"

namespace streamtune {

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct DynamicFeatures {
  double branch_miss_rate = 0.0;
  double l1_dcache_miss_rate = 0.0;
  double measured_instruction_rate = 0.0;  // instructions per simulated second
};

struct TaskTimeline {
  int task_id = 0;
  int partition = 0;
  double h2d_start = 0.0;
  double h2d_end = 0.0;
  double compute_start = 0.0;
  double compute_end = 0.0;
  double d2h_start = 0.0;
  double d2h_end = 0.0;
};

/// One DMA call as it occupied its channel.
struct TransferInterval {
  int task_id = 0;
  bool host_to_device = true;
  double start = 0.0;
  double end = 0.0;
};

struct SimOutcome {
  TimingBreakdown breakdown;
  std::vector<TaskTimeline> timeline;
  std::vector<TransferInterval> transfers;
  StreamConfig config{1, 1};
};

/// A kernel with its parameters bound: the quantities the simulator needs,
/// evaluated once so that configuration sweeps stay cheap.
struct PreparedWorkload {
  struct Buffer {
    double bytes = 0.0;
    double ghost_bytes = 0.0;  // per task boundary, host-to-device only
  };

  std::string name;
  std::int64_t loop_count = 1;      // trip count of the partitioned loop
  std::int64_t outer_trips = 1;     // product of enclosing trip counts
  double instructions_per_iteration = 0.0;  // per partitioned-loop iteration, all outer iterations included
  std::vector<Buffer> inputs;       // one entry per host-to-device call
  std::vector<Buffer> outputs;      // one entry per device-to-host call
  double branch_miss = 0.0;
  double l1_miss = 0.0;

  double total_instructions() const { return instructions_per_iteration * static_cast<double>(loop_count); }
};

PreparedWorkload prepare_workload(const KernelSpec& kernel, const ParamMap& params);

/// Copy of the workload cut down to `iterations` partitioned-loop iterations
/// and a single pass of every enclosing loop.
PreparedWorkload truncate_workload(const PreparedWorkload& workload, std::int64_t iterations);

/// Throws InfeasibleConfigError when partitions exceed the core count or tasks
/// exceed the partitioned loop's trip count.
SimOutcome simulate(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config,
                    std::optional<NoiseSpec> noise = std::nullopt, bool record_timeline = true);

SimOutcome simulate(const KernelSpec& kernel, const ParamMap& params, const PlatformSpec& platform,
                    StreamConfig config, std::optional<NoiseSpec> noise = std::nullopt);

/// Total simulated time only; same numbers as simulate(...).breakdown.total.
double simulate_total(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config);

/// Iterations of the partitioned loop executed by a profiling run.
inline constexpr std::int64_t kProfileIterations = 5;

struct Profile {
  DynamicFeatures features;
  double cost_seconds = 0.0;  // simulated time of the profiling run
};

/// Runs the single-stream configuration on a kProfileIterations-iteration copy
/// of the workload. Throws ProfileTooSmallError for shorter loops.
Profile profile_workload(const PreparedWorkload& workload, const PlatformSpec& platform);
DynamicFeatures profile_dynamic_features(const KernelSpec& kernel, const ParamMap& params,
                                         const PlatformSpec& platform);

struct Measurement {
  double mean_runtime = 0.0;
  int runs_used = 0;
  double gap = 0.0;
  bool capped = false;  // max_runs reached before the gap closed
};

/// Relative width the 95% confidence interval must fall below.
inline constexpr double kConfidenceGapTarget = 0.05;

/// Repeats simulate() with per-run seeds until the confidence gap of the
/// total times drops below kConfidenceGapTarget or max_runs is reached.
Measurement measure(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config,
                    std::optional<NoiseSpec> noise, int max_runs);

/// Standard normal draw from a counter-based stream; identical on every platform.
double normal_draw(std::uint64_t seed);

/// key = value platform files. Every PlatformSpec field must appear exactly once.
PlatformSpec parse_platform(std::string_view text);
PlatformSpec load_platform(const std::string& path);
std::string format_platform(const PlatformSpec& platform);

}  // namespace streamtune
