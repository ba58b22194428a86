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

#include "streamtune/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace streamtune {

namespace {

// Durations live on a 2^-40 s grid (about 0.9 ps). Sums of grid values stay
// exact while they remain below 2^12 s.
constexpr int kGridExponent = 40;
constexpr double kHorizon = 4096.0;

constexpr double kGridScale = static_cast<double>(1ULL << kGridExponent);

// Scaling by a power of two is exact, so this equals ldexp-based rounding.
double snap(double seconds) { return std::nearbyint(seconds * kGridScale) / kGridScale; }

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) {
  // (0, 1]: never zero, so log() below is finite.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

struct Interval {
  double start;
  double end;
};

double union_length(std::vector<Interval>& intervals) {
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  double total = 0.0;
  double cur_start = 0.0;
  double cur_end = -1.0;
  bool open = false;
  for (const auto& iv : intervals) {
    if (iv.end <= iv.start) continue;
    if (!open) {
      cur_start = iv.start;
      cur_end = iv.end;
      open = true;
    } else if (iv.start <= cur_end) {
      cur_end = std::max(cur_end, iv.end);
    } else {
      total += cur_end - cur_start;
      cur_start = iv.start;
      cur_end = iv.end;
    }
  }
  if (open) total += cur_end - cur_start;
  return total;
}

}  // namespace

double normal_draw(std::uint64_t seed) {
  std::uint64_t state = seed;
  const double u1 = unit_open(splitmix64(state));
  const double u2 = unit_open(splitmix64(state));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PreparedWorkload prepare_workload(const KernelSpec& kernel, const ParamMap& params) {
  const auto trips = trip_counts(kernel, params);
  const std::size_t par = kernel.parallel_loop();

  PreparedWorkload w;
  w.name = kernel.name;
  w.loop_count = trips[par];
  double outer = 1.0;
  double inner = 1.0;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    if (i < par) outer *= static_cast<double>(trips[i]);
    if (i > par) inner *= static_cast<double>(trips[i]);
  }
  w.outer_trips = 1;
  for (std::size_t i = 0; i < par; ++i) w.outer_trips *= trips[i];
  w.instructions_per_iteration = static_cast<double>(kernel.instruction_count) * inner * outer;

  for (const auto& name : kernel.transfers) {
    const ArraySpec& a = kernel.array(name);
    const double bytes = static_cast<double>(array_bytes(kernel, a, params));
    if (a.host_to_device()) {
      w.inputs.push_back({bytes, static_cast<double>(kernel.ghost_elements) * a.element_bytes});
    }
    if (a.device_to_host()) w.outputs.push_back({bytes, 0.0});
  }
  w.branch_miss = kernel.branch_miss;
  w.l1_miss = kernel.l1_miss;
  return w;
}

PreparedWorkload truncate_workload(const PreparedWorkload& workload, std::int64_t iterations) {
  if (iterations < 1 || iterations > workload.loop_count) {
    throw DomainError("truncation length must lie in [1, loop_count]");
  }
  PreparedWorkload w = workload;
  const double fraction = static_cast<double>(iterations) / static_cast<double>(workload.loop_count);
  w.loop_count = iterations;
  w.instructions_per_iteration = workload.instructions_per_iteration / static_cast<double>(workload.outer_trips);
  w.outer_trips = 1;
  for (auto& b : w.inputs) b.bytes *= fraction;
  for (auto& b : w.outputs) b.bytes *= fraction;
  return w;
}

namespace {

// Per-thread buffers reused across runs.
struct Scratch {
  std::vector<TaskTimeline> timeline;
  std::vector<std::int64_t> iters;
  std::vector<double> duration;
  std::vector<Interval> compute;
  std::vector<int> order;
};

struct Engine {
  const PreparedWorkload& w;
  const PlatformSpec& platform;
  StreamConfig config;
  bool record;

  SimOutcome run() const {
    const int p = config.partitions();
    const int t = config.tasks();
    if (p > platform.total_cores) {
      throw InfeasibleConfigError("config " + config.to_string() + " needs more partitions than the " +
                                  std::to_string(platform.total_cores) + " available cores");
    }
    if (t > w.loop_count) {
      throw InfeasibleConfigError("config " + config.to_string() + " has more tasks than the " +
                                  std::to_string(w.loop_count) + " iterations of '" + w.name + "'");
    }

    const double context = snap(platform.context_init_cost * p + platform.stream_mgmt_cost * t);
    const std::int64_t chunk = ceil_div(w.loop_count, t);
    const int cores = platform.total_cores / p;
    const double slowdown = 1.0 + platform.branch_miss_penalty * w.branch_miss + platform.l1_miss_penalty * w.l1_miss;
    const double throughput = platform.core_instruction_rate / slowdown * cores;
    const double spawn = platform.thread_spawn_cost * cores * static_cast<double>(ceil_div(w.outer_trips, t));
    const double ghost_share = static_cast<double>(t - 1) / static_cast<double>(t);
    const double loop_count = static_cast<double>(w.loop_count);

    SimOutcome out{{}, {}, {}, config};
    thread_local Scratch scratch;
    auto& tl = scratch.timeline;
    auto& iters = scratch.iters;
    auto& duration = scratch.duration;
    tl.assign(static_cast<std::size_t>(t), TaskTimeline{});
    iters.assign(static_cast<std::size_t>(t), 0);
    duration.assign(static_cast<std::size_t>(t), 0.0);
    if (record) out.transfers.reserve(static_cast<std::size_t>(t) * (w.inputs.size() + w.outputs.size()));

    double transfer_sum = 0.0;

    // Host-to-device: every task requests at time `context`, served in id order.
    double h2d_free = context;
    for (int i = 0; i < t; ++i) {
      auto& task = tl[static_cast<std::size_t>(i)];
      task.task_id = i;
      task.partition = i % p;
      const std::int64_t n = std::clamp<std::int64_t>(w.loop_count - i * chunk, 0, chunk);
      iters[static_cast<std::size_t>(i)] = n;
      task.h2d_start = task.h2d_end = h2d_free;
      if (n == 0) continue;
      const double share = static_cast<double>(n) / loop_count;
      for (const auto& buf : w.inputs) {
        const double volume = buf.bytes * share + buf.ghost_bytes * ghost_share;
        const double d = snap(platform.transfer_latency + volume * platform.h2d_bandwidth);
        if (record) out.transfers.push_back({i, true, h2d_free, h2d_free + d});
        h2d_free += d;
        transfer_sum += d;
      }
      task.h2d_end = h2d_free;
      duration[static_cast<std::size_t>(i)] =
          snap(static_cast<double>(n) * w.instructions_per_iteration / throughput + spawn);
    }

    // Partitions run their tasks one at a time; tasks arrive in id order.
    std::vector<double> partition_free(static_cast<std::size_t>(p), context);
    auto& compute = scratch.compute;
    compute.clear();
    for (auto& task : tl) {
      if (iters[static_cast<std::size_t>(task.task_id)] == 0) {
        task.compute_start = task.compute_end = task.d2h_start = task.d2h_end = task.h2d_end;
        continue;
      }
      double& free_at = partition_free[static_cast<std::size_t>(task.partition)];
      task.compute_start = std::max(task.h2d_end, free_at);
      task.compute_end = task.compute_start + duration[static_cast<std::size_t>(task.task_id)];
      free_at = task.compute_end;
      compute.push_back({task.compute_start, task.compute_end});
    }

    // Device-to-host: requests ordered by compute end, ties by task id. On a
    // shared channel every input call was requested earlier and goes first.
    auto& order = scratch.order;
    order.clear();
    for (int i = 0; i < t; ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& ta = tl[static_cast<std::size_t>(a)];
      const auto& tb = tl[static_cast<std::size_t>(b)];
      return ta.compute_end != tb.compute_end ? ta.compute_end < tb.compute_end : a < b;
    });
    double d2h_free = platform.bidirectional_overlap ? context : h2d_free;
    double finish = context;
    for (int i : order) {
      auto& task = tl[static_cast<std::size_t>(i)];
      const std::int64_t n = iters[static_cast<std::size_t>(i)];
      if (n == 0 || w.outputs.empty()) {
        task.d2h_start = task.d2h_end = task.compute_end;
        finish = std::max(finish, task.d2h_end);
        continue;
      }
      const double share = static_cast<double>(n) / loop_count;
      double now = std::max(d2h_free, task.compute_end);
      task.d2h_start = now;
      for (const auto& buf : w.outputs) {
        const double d = snap(platform.transfer_latency + buf.bytes * share * platform.d2h_bandwidth);
        if (record) out.transfers.push_back({i, false, now, now + d});
        now += d;
        transfer_sum += d;
      }
      task.d2h_end = now;
      d2h_free = now;
      finish = std::max(finish, now);
    }

    TimingBreakdown& b = out.breakdown;
    b.total = finish;
    b.transfer = transfer_sum;
    b.kernel = union_length(compute);
    b.context = context;
    const double sum = b.transfer + b.kernel + b.context;
    if (sum >= kHorizon) throw DomainError("simulated time exceeds the " + std::to_string(kHorizon) + " s horizon");
    b.overlap = sum - b.total;
    if (b.overlap < 0.0 || b.transfer + b.kernel + b.context - b.overlap != b.total) {
      throw InvariantError("timing breakdown identity violated for " + config.to_string());
    }
    if (record) out.timeline = tl;
    return out;
  }
};

void apply_noise(SimOutcome& out, const NoiseSpec& noise) {
  if (noise.sigma == 0.0) return;
  const double f = std::exp(noise.sigma * normal_draw(noise.seed));
  auto scale = [f](double& v) { v = snap(v * f); };
  TimingBreakdown& b = out.breakdown;
  scale(b.transfer);
  scale(b.kernel);
  scale(b.context);
  scale(b.overlap);
  b.total = b.transfer + b.kernel + b.context - b.overlap;
  for (auto& task : out.timeline) {
    scale(task.h2d_start);
    scale(task.h2d_end);
    scale(task.compute_start);
    scale(task.compute_end);
    scale(task.d2h_start);
    scale(task.d2h_end);
  }
  for (auto& tr : out.transfers) {
    scale(tr.start);
    scale(tr.end);
  }
}

}  // namespace

SimOutcome simulate(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config,
                    std::optional<NoiseSpec> noise, bool record_timeline) {
  SimOutcome out = Engine{workload, platform, config, record_timeline}.run();
  if (noise) {
    if (!(noise->sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
    apply_noise(out, *noise);
  }
  return out;
}

SimOutcome simulate(const KernelSpec& kernel, const ParamMap& params, const PlatformSpec& platform,
                    StreamConfig config, std::optional<NoiseSpec> noise) {
  return simulate(prepare_workload(kernel, params), platform, config, noise, true);
}

double simulate_total(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config) {
  return Engine{workload, platform, config, false}.run().breakdown.total;
}

Profile profile_workload(const PreparedWorkload& workload, const PlatformSpec& platform) {
  if (workload.loop_count < kProfileIterations) {
    throw ProfileTooSmallError("profiling needs at least " + std::to_string(kProfileIterations) +
                               " iterations of the partitioned loop, '" + workload.name + "' has " +
                               std::to_string(workload.loop_count));
  }
  const PreparedWorkload copy = truncate_workload(workload, kProfileIterations);
  const SimOutcome run = simulate(copy, platform, StreamConfig(1, 1), std::nullopt, false);

  Profile prof;
  prof.features.branch_miss_rate = workload.branch_miss;
  prof.features.l1_dcache_miss_rate = workload.l1_miss;
  const double executed = copy.total_instructions();
  prof.features.measured_instruction_rate = run.breakdown.kernel > 0.0 ? executed / run.breakdown.kernel : 0.0;
  prof.cost_seconds = run.breakdown.total;
  return prof;
}

DynamicFeatures profile_dynamic_features(const KernelSpec& kernel, const ParamMap& params,
                                         const PlatformSpec& platform) {
  return profile_workload(prepare_workload(kernel, params), platform).features;
}

Measurement measure(const PreparedWorkload& workload, const PlatformSpec& platform, StreamConfig config,
                    std::optional<NoiseSpec> noise, int max_runs) {
  if (max_runs < 2) throw DomainError("measure needs max_runs >= 2");
  std::vector<double> totals;
  totals.reserve(static_cast<std::size_t>(max_runs));
  const SimOutcome base = Engine{workload, platform, config, false}.run();
  Measurement m;
  for (int run = 0; run < max_runs; ++run) {
    SimOutcome out = base;
    if (noise) {
      std::uint64_t state = noise->seed ^ (0xA0761D6478BD642FULL * static_cast<std::uint64_t>(run + 1));
      apply_noise(out, NoiseSpec{noise->sigma, splitmix64(state)});
    }
    totals.push_back(out.breakdown.total);
    if (totals.size() >= 2) {
      m.gap = confidence_gap(totals);
      if (m.gap < kConfidenceGapTarget) break;
    }
  }
  m.runs_used = static_cast<int>(totals.size());
  m.capped = m.gap >= kConfidenceGapTarget;
  double sum = 0.0;
  for (double v : totals) sum += v;
  m.mean_runtime = sum / static_cast<double>(totals.size());
  return m;
}

// ---------------------------------------------------------------------------
// Platform files

namespace {

struct PlatformField {
  const char* key;
  double PlatformSpec::*real;
};

constexpr PlatformField kRealFields[] = {
    {"h2d_bandwidth", &PlatformSpec::h2d_bandwidth},
    {"d2h_bandwidth", &PlatformSpec::d2h_bandwidth},
    {"transfer_latency", &PlatformSpec::transfer_latency},
    {"context_init_cost", &PlatformSpec::context_init_cost},
    {"stream_mgmt_cost", &PlatformSpec::stream_mgmt_cost},
    {"thread_spawn_cost", &PlatformSpec::thread_spawn_cost},
    {"core_instruction_rate", &PlatformSpec::core_instruction_rate},
    {"branch_miss_penalty", &PlatformSpec::branch_miss_penalty},
    {"l1_miss_penalty", &PlatformSpec::l1_miss_penalty},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

PlatformSpec parse_platform(std::string_view text) {
  PlatformSpec spec;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, 1);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.emplace(std::string(key), line_no).second) {
      throw ParseError("duplicate key '" + std::string(key) + "'", line_no, 1);
    }
    const auto value_column = static_cast<std::size_t>(value.data() - line.data()) + 1;

    if (key == "total_cores") {
      int v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError("total_cores must be an integer", line_no, value_column);
      }
      spec.total_cores = v;
    } else if (key == "bidirectional_overlap") {
      if (value == "true") spec.bidirectional_overlap = true;
      else if (value == "false") spec.bidirectional_overlap = false;
      else throw ParseError("bidirectional_overlap must be true or false", line_no, value_column);
    } else {
      const PlatformField* field = nullptr;
      for (const auto& f : kRealFields) {
        if (key == f.key) field = &f;
      }
      if (!field) throw ParseError("unknown platform key '" + std::string(key) + "'", line_no, 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError("'" + std::string(key) + "' must be a real number", line_no, value_column);
      }
      spec.*(field->real) = v;
    }
  }
  const auto require = [&](const char* key) {
    if (!seen.contains(key)) throw ParseError("missing platform key '" + std::string(key) + "'", 0, 0);
  };
  require("total_cores");
  require("bidirectional_overlap");
  for (const auto& f : kRealFields) require(f.key);
  spec.validate();
  return spec;
}

PlatformSpec load_platform(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open platform file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_platform(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0, 0);
  }
}

std::string format_platform(const PlatformSpec& p) {
  std::string out;
  out += "total_cores = " + std::to_string(p.total_cores) + "\n";
  out += std::string("bidirectional_overlap = ") + (p.bidirectional_overlap ? "true" : "false") + "\n";
  for (const auto& f : kRealFields) out += std::string(f.key) + " = " + format_double(p.*(f.real)) + "\n";
  return out;
}

}  // namespace streamtune
