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

#include "streamtune/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace streamtune {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Smallest slope or intercept a fit may report in the kernel regime.
constexpr double kFitFloor = 1e-15;

StreamConfig square_config(std::int64_t n, int max_tasks, int max_partitions) {
  const auto tasks = static_cast<int>(std::clamp<std::int64_t>(n, 1, std::max(1, max_tasks)));
  return {std::min(tasks, std::max(1, max_partitions)), tasks};
}

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("probe task sizes are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

std::int64_t round_count(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

void LiuParams::validate() const {
  if (n_elements < 2) throw DomainError("Liu model needs at least 2 elements");
  for (double v : {alpha, beta, eta, gamma}) {
    if (!std::isfinite(v)) throw DomainError("Liu coefficients must be finite");
  }
  if (regime == Regime::kKernelDominated && !(alpha > 0.0 && gamma > 0.0)) {
    throw DomainError("kernel-dominated Liu model needs alpha > 0 and gamma > 0");
  }
}

double liu_total_time(const LiuParams& p, double m) {
  p.validate();
  const auto n = static_cast<double>(p.n_elements);
  if (!(m > 0.0 && m <= n)) throw DomainError("task size must lie in (0, N]");
  if (p.regime == Regime::kKernelDominated) {
    return p.alpha * m + n * p.gamma / m + n * p.eta + p.beta;
  }
  return p.alpha * n + 2.0 * (n / m) * p.beta;
}

double liu_optimal_task_size(const LiuParams& p) {
  p.validate();
  return std::sqrt(static_cast<double>(p.n_elements) * p.gamma / p.alpha);
}

StreamConfig liu_optimal_tasks(const LiuParams& p, int max_tasks, int max_partitions) {
  p.validate();
  if (p.regime == Regime::kTransferDominated) return square_config(2, max_tasks, max_partitions);
  const double m = liu_optimal_task_size(p);
  const std::int64_t n = round_count(static_cast<double>(p.n_elements) / m);
  const std::int64_t cap = std::min<std::int64_t>(p.n_elements, max_tasks);
  return square_config(std::clamp<std::int64_t>(n, 1, cap), max_tasks, max_partitions);
}

void WerkhovenParams::validate() const {
  for (double v : {g, G_hd, G_dh, B_hd, B_dh, t_kernel, L, o}) {
    if (!finite_nonneg(v)) throw DomainError("Werkhoven parameters must be finite and >= 0");
  }
  if (!(B_hd + B_dh > 0.0)) throw DomainError("Werkhoven model needs B_hd + B_dh > 0");
}

double werkhoven_residual(const WerkhovenParams& p, double n_s) {
  const double lhs = p.B_dh * p.G_dh + p.g * (n_s - 1.0);
  const double rhs = p.B_dh > p.B_hd ? p.t_kernel / n_s + (p.B_dh / n_s) * p.G_dh
                                     : (p.B_hd / n_s) * p.G_hd + p.t_kernel / n_s;
  return lhs - rhs;
}

double werkhoven_root(const WerkhovenParams& p) {
  p.validate();
  double lo = kWerkhovenLower;
  double hi = kWerkhovenUpper;
  double f_lo = werkhoven_residual(p, lo);
  const double f_hi = werkhoven_residual(p, hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    throw NoSolutionError("stream-count equation has no root in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  // Bisect until both the bracket and the residual are within tolerance, or
  // the bracket stops shrinking in floating point.
  double mid = 0.5 * (lo + hi);
  double f_mid = werkhoven_residual(p, mid);
  while (hi - lo > kWerkhovenTolerance || std::abs(f_mid) >= kWerkhovenTolerance) {
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next <= lo || next >= hi) break;
    mid = next;
    f_mid = werkhoven_residual(p, mid);
  }
  return mid;
}

StreamConfig werkhoven_optimal_tasks(const WerkhovenParams& p, int max_tasks, int max_partitions) {
  return square_config(std::max<std::int64_t>(1, round_count(werkhoven_root(p))), max_tasks, max_partitions);
}

StreamConfig fixed_config(std::string_view name) {
  if (name == "phi_small") return {4, 16};
  if (name == "phi_best_avg") return {17, 85};
  if (name == "gpu_small") return {2, 2};
  if (name == "gpu_large") return {4, 4};
  throw DomainError("unknown fixed configuration '" + std::string(name) + "'");
}

LiuParams fit_liu(const PreparedWorkload& workload, const PlatformSpec& platform) {
  if (workload.loop_count < 2) throw DomainError("Liu fit needs a loop of at least 2 iterations");
  std::vector<double> m, transfer, compute;
  TimingBreakdown single;
  for (std::int64_t n : {1, 2, 4, 8}) {
    if (n > workload.loop_count) break;
    const SimOutcome out = simulate(workload, platform, StreamConfig(1, static_cast<int>(n)));
    if (n == 1) single = out.breakdown;
    const TaskTimeline& first = out.timeline.front();
    double t = 0.0;
    for (const auto& tr : out.transfers) {
      if (tr.task_id == 0) t += tr.end - tr.start;
    }
    m.push_back(static_cast<double>((workload.loop_count + n - 1) / n));
    transfer.push_back(t);
    compute.push_back(first.compute_end - first.compute_start);
  }
  const Line tl = least_squares(m, transfer);
  const Line cl = least_squares(m, compute);
  LiuParams p;
  p.alpha = tl.slope;
  p.beta = tl.intercept;
  p.eta = cl.slope;
  p.gamma = cl.intercept;
  p.n_elements = workload.loop_count;
  p.regime = single.kernel >= single.transfer ? Regime::kKernelDominated : Regime::kTransferDominated;
  if (p.regime == Regime::kKernelDominated) {
    p.alpha = std::max(p.alpha, kFitFloor);
    p.gamma = std::max(p.gamma, kFitFloor);
  }
  return p;
}

WerkhovenParams fit_werkhoven(const PreparedWorkload& workload, const PlatformSpec& platform) {
  WerkhovenParams p;
  for (const auto& b : workload.inputs) p.B_hd += b.bytes;
  for (const auto& b : workload.outputs) p.B_dh += b.bytes;
  p.G_hd = platform.h2d_bandwidth;
  p.G_dh = platform.d2h_bandwidth;
  p.g = platform.transfer_latency;
  p.L = platform.transfer_latency;
  p.o = 0.0;
  p.t_kernel = simulate(workload, platform, StreamConfig(1, 1), std::nullopt, false).breakdown.kernel;
  return p;
}

}  // namespace streamtune
