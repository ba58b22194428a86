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

#include <cmath>
#include <limits>

#include "streamtune/baselines.hpp"
#include "streamtune/random.hpp"
#include "test_support.hpp"

using namespace streamtune;

namespace {

LiuParams kernel_regime(double alpha, double beta, double eta, double gamma, std::int64_t n) {
  return {alpha, beta, eta, gamma, n, Regime::kKernelDominated};
}

LiuParams random_kernel_regime(Rng& rng) {
  for (;;) {
    const auto n = static_cast<std::int64_t>(std::exp(rng.uniform(std::log(10.0), std::log(200000.0))));
    const auto p = kernel_regime(std::exp(rng.uniform(-20.0, 0.0)), rng.uniform(0.0, 1e-3), rng.uniform(0.0, 1e-6),
                                 std::exp(rng.uniform(-20.0, 0.0)), n);
    const double m = liu_optimal_task_size(p);
    if (m >= 1.0 && m <= static_cast<double>(n)) return p;
  }
}

WerkhovenParams random_bracketed(Rng& rng) {
  for (;;) {
    WerkhovenParams p;
    p.g = rng.uniform(0.0, 0.01);
    p.G_hd = rng.uniform(0.1, 2.0);
    p.G_dh = rng.uniform(0.1, 2.0);
    p.B_hd = rng.uniform(0.0, 10.0);
    p.B_dh = rng.uniform(0.0, 10.0);
    p.t_kernel = rng.uniform(0.0, 50.0);
    p.L = rng.uniform(0.0, 1.0);
    p.o = rng.uniform(0.0, 1.0);
    if (werkhoven_residual(p, kWerkhovenLower) < 0.0 && werkhoven_residual(p, kWerkhovenUpper) > 0.0) return p;
  }
}

}  // namespace

TEST_CASE("liu total time by substitution") {
  CHECK(liu_total_time(kernel_regime(1, 0, 0, 4, 100), 20) == 40.0);
  const LiuParams transfer{2, 3, 0, 0, 10, Regime::kTransferDominated};
  CHECK(liu_total_time(transfer, 5) == 32.0);
  CHECK_THROWS_AS(liu_total_time(transfer, 0.0), DomainError);
  CHECK_THROWS_AS(liu_total_time(transfer, 11.0), DomainError);
  CHECK_THROWS_AS(liu_total_time(kernel_regime(0, 0, 0, 4, 100), 5), DomainError);
}

TEST_CASE("liu closed form") {
  const auto p = kernel_regime(1, 0, 0, 4, 100);
  CHECK(liu_optimal_task_size(p) == 20.0);
  CHECK(liu_optimal_tasks(p) == StreamConfig(5, 5));
}

TEST_CASE("liu transfer regime always picks two tasks") {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const LiuParams p{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1),
                      2 + static_cast<std::int64_t>(rng.below(1000)), Regime::kTransferDominated};
    CHECK(liu_optimal_tasks(p) == StreamConfig(2, 2));
  }
}

TEST_CASE("liu task count is clamped to the grid") {
  CHECK(liu_optimal_tasks(kernel_regime(1, 0, 0, 1e-6, 100000)).tasks() == 256);
  CHECK(liu_optimal_tasks(kernel_regime(1, 0, 0, 1e-6, 100000)).partitions() == 224);
  CHECK(liu_optimal_tasks(kernel_regime(1e-6, 0, 0, 1, 100)) == StreamConfig(1, 1));
}

TEST_CASE("liu optimum is a local minimum and a stationary point") {
  Rng rng(40);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_kernel_regime(rng);
    const double m = liu_optimal_task_size(p);
    const double n = static_cast<double>(p.n_elements);
    const double t = liu_total_time(p, m);
    if (m - 1.0 > 0.0) CHECK(t < liu_total_time(p, m - 1.0));
    if (m + 1.0 <= n) CHECK(t < liu_total_time(p, m + 1.0));
    const double h = 1e-3 * m;
    if (m - 2 * h > 0.0 && m + 2 * h <= n) {
      const auto slope = [&](double x) { return (liu_total_time(p, x + h) - liu_total_time(p, x - h)) / (2 * h); };
      CHECK(slope(m - h) < 0.0);
      CHECK(slope(m + h) > 0.0);
    }
  }
}

TEST_CASE("liu closed form matches a brute-force grid") {
  Rng rng(41);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_kernel_regime(rng);
    const double m = liu_optimal_task_size(p);
    double best = std::numeric_limits<double>::infinity();
    std::int64_t arg = 1;
    for (std::int64_t k = 1; k <= p.n_elements; ++k) {
      const double t = liu_total_time(p, static_cast<double>(k));
      if (t < best) {
        best = t;
        arg = k;
      }
    }
    if (std::abs(static_cast<double>(arg) - m) > 1.0) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("werkhoven closed-form special cases") {
  // Equal volumes make both branch readings of the left side coincide.
  WerkhovenParams a;
  a.B_hd = a.B_dh = 100.0;
  a.G_hd = a.G_dh = 0.01;
  a.t_kernel = a.B_hd * a.G_hd;
  CHECK(std::abs(werkhoven_root(a) - 2.0) < 1e-9);
  CHECK(werkhoven_optimal_tasks(a) == StreamConfig(2, 2));

  WerkhovenParams b;
  b.B_hd = 10.0;
  b.B_dh = 100.0;
  b.G_hd = 0.02;
  b.G_dh = 0.01;
  b.t_kernel = 3.0 * b.B_dh * b.G_dh;
  CHECK(std::abs(werkhoven_root(b) - 4.0) < 1e-9);
  CHECK(werkhoven_optimal_tasks(b) == StreamConfig(4, 4));
}

TEST_CASE("werkhoven root residual") {
  Rng rng(51);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_bracketed(rng);
    const double r = werkhoven_root(p);
    CHECK(r >= kWerkhovenLower);
    CHECK(r <= kWerkhovenUpper);
    CHECK(std::abs(werkhoven_residual(p, r)) < 1e-9);
  }
}

TEST_CASE("werkhoven without a bracket") {
  WerkhovenParams p;
  p.B_hd = 1.0;
  p.G_hd = 1.0;
  p.B_dh = 1.0;
  p.G_dh = 1.0;
  p.t_kernel = 1e9;  // right side stays above the left on the whole bracket
  CHECK_THROWS_AS(werkhoven_root(p), NoSolutionError);
  WerkhovenParams empty;
  CHECK_THROWS_AS(werkhoven_root(empty), DomainError);
}

TEST_CASE("fixed configurations") {
  CHECK(fixed_config("phi_small") == StreamConfig(4, 16));
  CHECK(fixed_config("phi_best_avg") == StreamConfig(17, 85));
  CHECK(fixed_config("gpu_small") == StreamConfig(2, 2));
  CHECK(fixed_config("gpu_large") == StreamConfig(4, 4));
  CHECK_THROWS_AS(fixed_config("phi_huge"), DomainError);
}

TEST_CASE("rounding is half up") {
  CHECK(round_count(2.5) == 3);
  CHECK(round_count(2.49) == 2);
  CHECK(round_count(0.5) == 1);
}

TEST_CASE("fitted baselines are pure") {
  const auto prep = prepare_workload(testing::reference_kernel(), {{"N", 4096}});
  const auto plat = testing::reference_platform();
  const auto a = fit_liu(prep, plat);
  const auto b = fit_liu(prep, plat);
  CHECK(a.alpha == b.alpha);
  CHECK(a.gamma == b.gamma);
  CHECK(a.regime == b.regime);
  CHECK(liu_optimal_tasks(a) == liu_optimal_tasks(b));
  const auto w = fit_werkhoven(prep, plat);
  CHECK(w.B_hd == 4.0 * 4096);
  CHECK(w.B_dh == 4.0 * 4096);
  CHECK(w.G_hd == plat.h2d_bandwidth);
}

TEST_CASE("transfer-dominated workload gets two tasks from liu") {
  auto plat = testing::reference_platform();
  plat.core_instruction_rate = 1e12;
  const auto prep = prepare_workload(testing::reference_kernel(), {{"N", 4096}});
  const auto p = fit_liu(prep, plat);
  CHECK(p.regime == Regime::kTransferDominated);
  CHECK(liu_optimal_tasks(p) == StreamConfig(2, 2));
}
