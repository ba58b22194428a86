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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "streamtune/harness.hpp"
#include "streamtune/random.hpp"
#include "streamtune/simulator.hpp"
#include "test_support.hpp"

using namespace streamtune;

namespace {

// Straight-line schedule of W1 (tests/oracles/w1_schedule.py).
constexpr double kW1Single = 0.0021509999996851548;
constexpr double kW1Multi = 0.0017939999970622011;
constexpr double kW1Speedup = 1.1989966573063355;

// runs_used of measure() on W1 at (4,16) with sigma 0.01, seed 42, max_runs 10.
constexpr int kFrozenRunsUsed = 2;

bool identity_holds(const TimingBreakdown& b) {
  return b.total == b.transfer + b.kernel + b.context - b.overlap && b.overlap >= 0.0;
}

void check_outcome(const SimOutcome& out, bool bidirectional) {
  CHECK(identity_holds(out.breakdown));
  CHECK(out.breakdown.overlap <= out.breakdown.transfer + out.breakdown.kernel);
  double last = 0.0;
  for (const auto& t : out.timeline) {
    CHECK(t.h2d_start <= t.h2d_end);
    CHECK(t.h2d_end <= t.compute_start);
    CHECK(t.compute_start <= t.compute_end);
    CHECK(t.compute_end <= t.d2h_start);
    CHECK(t.d2h_start <= t.d2h_end);
    last = std::max(last, t.d2h_end);
  }
  CHECK(out.breakdown.total == last);
  auto xfers = out.transfers;
  std::sort(xfers.begin(), xfers.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < xfers.size(); ++i) {
    for (std::size_t j = i + 1; j < xfers.size() && xfers[j].start < xfers[i].end; ++j) {
      const bool same_channel = !bidirectional || xfers[i].host_to_device == xfers[j].host_to_device;
      CHECK_FALSE(same_channel);
    }
  }
}

PlatformSpec no_overhead(PlatformSpec p) {
  p.context_init_cost = 0.0;
  p.stream_mgmt_cost = 0.0;
  p.thread_spawn_cost = 0.0;
  return p;
}

}  // namespace

TEST_CASE("W1 matches the straight-line schedule") {
  const auto prep = prepare_workload(testing::reference_kernel(), testing::reference_params());
  const auto plat = testing::reference_platform();
  const auto single = simulate(prep, plat, {1, 1});
  const auto multi = simulate(prep, plat, {4, 16});
  CHECK(single.breakdown.total == kW1Single);
  CHECK(multi.breakdown.total == kW1Multi);
  CHECK(speedup(single.breakdown.total, multi.breakdown.total) == doctest::Approx(kW1Speedup).epsilon(1e-12));
  check_outcome(single, false);
  check_outcome(multi, false);
  CHECK(multi.timeline.size() == 16);
  for (const auto& t : multi.timeline) CHECK(t.partition == t.task_id % 4);
}

TEST_CASE("single stream has zero overlap") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  for (const auto& w : corpus.workloads) {
    const auto out = simulate(w.kernel, w.params, corpus.platform, {1, 1});
    CHECK(out.breakdown.overlap == 0.0);
    CHECK(identity_holds(out.breakdown));
  }
}

TEST_CASE("breakdown identity and schedule invariants on random configurations") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  const auto gpu = load_platform(testing::corpus_path("gpu.platform"));
  Rng rng(5);
  for (const auto& w : corpus.workloads) {
    const auto prep = prepare_workload(w.kernel, w.params);
    for (int i = 0; i < 4; ++i) {
      const int p = 1 + static_cast<int>(rng.below(32));
      const int t = p + static_cast<int>(rng.below(64));
      check_outcome(simulate(prep, corpus.platform, {p, t}), false);
      check_outcome(simulate(prep, gpu, {p, t}), true);
      const auto noisy = simulate(prep, corpus.platform, {p, t}, NoiseSpec{0.05, rng.next()});
      CHECK(identity_holds(noisy.breakdown));
    }
  }
}

TEST_CASE("shared channel serializes opposite directions") {
  auto plat = testing::reference_platform();
  const auto k = testing::reference_kernel();
  const auto out = simulate(k, {{"N", 64}}, plat, {2, 2});
  REQUIRE(out.timeline.size() == 2);
  const auto& first = out.timeline[0];
  const auto& second = out.timeline[1];
  CHECK((first.d2h_end <= second.h2d_start || second.h2d_end <= first.d2h_start));
  check_outcome(out, false);
}

TEST_CASE("infeasible configurations") {
  const auto prep = prepare_workload(testing::reference_kernel(), testing::reference_params());
  const auto plat = testing::reference_platform();
  CHECK_THROWS_AS(simulate(prep, plat, {9, 9}), InfeasibleConfigError);
  CHECK_THROWS_AS(simulate(prep, plat, {1, 65}), InfeasibleConfigError);
  CHECK_NOTHROW(simulate(prep, plat, {8, 64}));
}

TEST_CASE("context cost is linear and monotone in partitions") {
  auto plat = testing::reference_platform();
  plat.h2d_bandwidth = plat.d2h_bandwidth = 0.0;
  plat.transfer_latency = 0.0;
  plat.thread_spawn_cost = 0.0;
  const auto k = parse_kernel("kernel idle\nparam N\nloop i N parallel\ninstructions 0\nghost 0\n");
  const auto prep = prepare_workload(k, {{"N", 64}});
  for (int t : {8, 16, 64}) {
    double prev = 0.0;
    for (int p = 1; p <= 8; ++p) {
      const auto out = simulate(prep, plat, {p, t});
      CHECK(out.breakdown.total >= prev);
      CHECK(out.breakdown.context == doctest::Approx(1e-5 * p + 1e-6 * t).epsilon(1e-9));
      prev = out.breakdown.total;
    }
  }
}

TEST_CASE("simulation is deterministic") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  const auto& w = corpus.workloads[17];
  const auto a = simulate(w.kernel, w.params, corpus.platform, {3, 40}, NoiseSpec{0.1, 99});
  const auto b = simulate(w.kernel, w.params, corpus.platform, {3, 40}, NoiseSpec{0.1, 99});
  CHECK(a.breakdown == b.breakdown);
  REQUIRE(a.timeline.size() == b.timeline.size());
  for (std::size_t i = 0; i < a.timeline.size(); ++i) {
    CHECK(a.timeline[i].d2h_end == b.timeline[i].d2h_end);
    CHECK(a.timeline[i].compute_start == b.timeline[i].compute_start);
  }
  const auto c = simulate(w.kernel, w.params, corpus.platform, {3, 40}, NoiseSpec{0.1, 100});
  CHECK(c.breakdown.total != a.breakdown.total);
}

TEST_CASE("profiling echoes declared miss rates") {
  auto k = testing::reference_kernel();
  k.branch_miss = 0.02;
  k.l1_miss = 0.1;
  const auto f = profile_dynamic_features(k, testing::reference_params(), testing::reference_platform());
  CHECK(f.branch_miss_rate == 0.02);
  CHECK(f.l1_dcache_miss_rate == 0.1);
  CHECK(f.measured_instruction_rate > 0.0);
}

TEST_CASE("doubling instructions doubles kernel time, not the measured rate") {
  auto plat = testing::reference_platform();
  plat.thread_spawn_cost = 0.0;
  auto k = testing::reference_kernel();
  const auto a = simulate(k, testing::reference_params(), plat, {1, 1});
  const auto ra = profile_dynamic_features(k, testing::reference_params(), plat);
  k.instruction_count *= 2;
  const auto b = simulate(k, testing::reference_params(), plat, {1, 1});
  const auto rb = profile_dynamic_features(k, testing::reference_params(), plat);
  CHECK(b.breakdown.kernel == doctest::Approx(2.0 * a.breakdown.kernel).epsilon(1e-12));
  // The profiling run is short, so the time grid limits agreement.
  CHECK(rb.measured_instruction_rate == doctest::Approx(ra.measured_instruction_rate).epsilon(1e-6));
}

TEST_CASE("profiling needs five iterations") {
  CHECK_THROWS_AS(profile_dynamic_features(testing::reference_kernel(), {{"N", 4}}, testing::reference_platform()),
                  ProfileTooSmallError);
  CHECK_NOTHROW(profile_dynamic_features(testing::reference_kernel(), {{"N", 5}}, testing::reference_platform()));
}

TEST_CASE("profiling costs under one percent of the full run") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  for (const auto& w : corpus.workloads) {
    const auto prep = prepare_workload(w.kernel, w.params);
    const auto prof = profile_workload(prep, corpus.platform);
    const double full = simulate_total(prep, corpus.platform, {1, 1});
    CAPTURE(w.id);
    CHECK(prof.cost_seconds < 0.01 * full);
  }
}

TEST_CASE("measure") {
  const auto prep = prepare_workload(testing::reference_kernel(), testing::reference_params());
  const auto plat = testing::reference_platform();

  const auto quiet = measure(prep, plat, {4, 16}, std::nullopt, 10);
  CHECK(quiet.runs_used == 2);
  CHECK(quiet.gap == 0.0);
  CHECK_FALSE(quiet.capped);
  CHECK(quiet.mean_runtime == kW1Multi);

  const auto wild = measure(prep, plat, {4, 16}, NoiseSpec{3.0, 1}, 3);
  CHECK(wild.runs_used == 3);
  CHECK(wild.capped);

  const auto mild = measure(prep, plat, {4, 16}, NoiseSpec{0.01, 42}, 10);
  CHECK(mild.runs_used == kFrozenRunsUsed);
  CHECK_FALSE(mild.capped);

  CHECK_THROWS_AS(measure(prep, plat, {1, 1}, std::nullopt, 1), DomainError);
}

TEST_CASE("platform files") {
  const auto plat = load_platform(testing::corpus_path("xeonphi.platform"));
  CHECK(plat.total_cores == 224);
  CHECK_FALSE(plat.bidirectional_overlap);
  CHECK(parse_platform(format_platform(plat)) == plat);
  CHECK(load_platform(testing::corpus_path("gpu.platform")).bidirectional_overlap);
  const std::string text = format_platform(plat);
  CHECK_THROWS_AS(parse_platform(text + "warp_size = 32\n"), ParseError);
  CHECK_THROWS_AS(parse_platform("total_cores = 4\n"), ParseError);
}

TEST_CASE("overlap alone stays under the channel bound") {
  // Strided sweep here; the acceptance run covers the full grid.
  const auto corpus = load_corpus(testing::corpus_path(""));
  const auto phi = no_overhead(corpus.platform);
  const auto gpu = no_overhead(load_platform(testing::corpus_path("gpu.platform")));
  const auto configs = strided_configs(corpus.grid, 16);
  for (const auto& w : corpus.workloads) {
    const auto prep = prepare_workload(w.kernel, w.params);
    const double phi_single = simulate_total(prep, phi, {1, 1});
    const double gpu_single = simulate_total(prep, gpu, {1, 1});
    double phi_best = 0.0;
    double gpu_best = 0.0;
    for (const auto& c : configs) {
      if (c.tasks() > prep.loop_count) continue;
      phi_best = std::max(phi_best, phi_single / simulate_total(prep, phi, c));
      gpu_best = std::max(gpu_best, gpu_single / simulate_total(prep, gpu, c));
    }
    CAPTURE(w.id);
    CHECK(phi_best < 2.0);
    CHECK(gpu_best < 3.0);
  }
}

TEST_CASE("splitting an outer loop cuts thread spawn overhead") {
  auto plat = testing::reference_platform();
  plat.total_cores = 64;
  plat.thread_spawn_cost = 1e-4;
  const auto k = load_kernel(testing::corpus_path("kernels/jacobi_1d.kernel"));
  const auto prep = prepare_workload(k, {{"N", 4096}, {"STEPS", 200}});
  const double single = simulate(prep, plat, {1, 1}).breakdown.kernel;
  double best = 0.0;
  for (int p : {2, 4, 8, 16, 32}) best = std::max(best, single / simulate(prep, plat, {p, p}).breakdown.kernel);
  CHECK(best > 2.0);
}
