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

// Analytical stream-count models and fixed configurations used as
// comparators for the learned tuner.

#pragma once

#include <cstdint>
#include <string_view>

#include "streamtune/core.hpp"
#include "streamtune/simulator.hpp"

namespace streamtune {

enum class Regime { kKernelDominated, kTransferDominated };

/// Transfer time alpha*m + beta and compute time eta*m + gamma of one task of
/// m elements, out of n_elements in total.
struct LiuParams {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  std::int64_t n_elements = 2;
  Regime regime = Regime::kKernelDominated;

  void validate() const;
};

double liu_total_time(const LiuParams& p, double m);

/// Real-valued task size minimizing the kernel-regime total.
double liu_optimal_task_size(const LiuParams& p);

/// Tasks n = round(N / m*) clamped to [1, min(N, max_tasks)]; two tasks in
/// the transfer regime. Partitions equal tasks, capped at max_partitions.
StreamConfig liu_optimal_tasks(const LiuParams& p, int max_tasks = 256, int max_partitions = 224);

/// LogGP-style parameters. L and o are carried but unused by the equation.
struct WerkhovenParams {
  double g = 0.0;
  double G_hd = 0.0;
  double G_dh = 0.0;
  double B_hd = 0.0;
  double B_dh = 0.0;
  double t_kernel = 0.0;
  double L = 0.0;
  double o = 0.0;

  void validate() const;
};

/// Left minus right side of the stream-count equation at n_s.
double werkhoven_residual(const WerkhovenParams& p, double n_s);

inline constexpr double kWerkhovenLower = 1.0;
inline constexpr double kWerkhovenUpper = 4096.0;
inline constexpr double kWerkhovenTolerance = 1e-9;

/// Bisection root on [1, 4096]. Throws NoSolutionError without a sign change.
double werkhoven_root(const WerkhovenParams& p);

StreamConfig werkhoven_optimal_tasks(const WerkhovenParams& p, int max_tasks = 256, int max_partitions = 224);

/// phi_small, phi_best_avg, gpu_small or gpu_large. Throws DomainError
/// otherwise.
StreamConfig fixed_config(std::string_view name);

inline constexpr std::string_view kFixedConfigNames[] = {"phi_small", "phi_best_avg", "gpu_small", "gpu_large"};

/// Least-squares fit from single-partition probe runs with 1, 2, 4 and 8
/// tasks (task sizes N, N/2, N/4, N/8).
LiuParams fit_liu(const PreparedWorkload& workload, const PlatformSpec& platform);

WerkhovenParams fit_werkhoven(const PreparedWorkload& workload, const PlatformSpec& platform);

/// Round half up.
std::int64_t round_count(double x);

}  // namespace streamtune
