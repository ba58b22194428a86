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

#include "streamtune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "streamtune/baselines.hpp"
#include "streamtune/random.hpp"

namespace streamtune {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::uint64_t mix(std::uint64_t h) {
  h += 0x9E3779B97F4A7C15ULL;
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

bool fits(const PlatformSpec& platform, StreamConfig c, std::int64_t loop_count) {
  return c.partitions() <= platform.total_cores && c.tasks() <= loop_count;
}

std::int64_t parse_int(std::string_view text, std::size_t line_no) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected an integer, got '" + std::string(text) + "'", line_no, 1);
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Corpus

void Corpus::validate() const {
  std::set<std::string> ids;
  for (const auto& w : workloads) {
    if (w.id.empty() || w.id.find_first_of(", \t\n") != std::string::npos) {
      throw SchemaError("workload id '" + w.id + "' must be non-empty without commas or blanks");
    }
    if (!ids.insert(w.id).second) throw SchemaError("duplicate workload id '" + w.id + "'");
  }
  platform.validate();
  grid.validate();
  if (!(noise.sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
  if (max_runs < 2) throw DomainError("max_runs must be >= 2");
}

Corpus load_corpus(const std::string& dir) {
  const std::filesystem::path root(dir);
  const auto manifest = root / "manifest";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open corpus manifest '" + manifest.string() + "'");

  Corpus corpus;
  std::map<std::string, KernelSpec> kernels;
  std::map<std::string, int> next_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto toks = words(view);
    if (toks.empty()) continue;
    if (toks[0] == "siblings") {
      if (toks.size() < 3) throw ParseError("'siblings' needs at least two groups", line_no, 1);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        for (std::size_t j = 1; j < toks.size(); ++j) {
          if (i != j) corpus.siblings[std::string(toks[i])].emplace_back(toks[j]);
        }
      }
      continue;
    }
    if (toks[0] == "platform") {
      if (toks.size() != 2) throw ParseError("'platform' needs exactly one file", line_no, 1);
      corpus.platform = load_platform((root / std::string(toks[1])).string());
      continue;
    }
    if (toks[0] != "workload" || toks.size() < 2) {
      throw ParseError("expected 'workload FILE NAME=VALUE...', 'platform FILE' or 'siblings GROUP...'", line_no, 1);
    }
    const std::string file(toks[1]);
    auto it = kernels.find(file);
    if (it == kernels.end()) it = kernels.emplace(file, load_kernel((root / file).string())).first;

    Workload w;
    w.kernel = it->second;
    w.group = w.kernel.name;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      const auto eq = toks[i].find('=');
      if (eq == std::string_view::npos) throw ParseError("expected NAME=VALUE binding", line_no, 1);
      w.params[std::string(toks[i].substr(0, eq))] = parse_int(toks[i].substr(eq + 1), line_no);
    }
    w.id = w.group + "/" + std::to_string(next_index[w.group]++);
    corpus.workloads.push_back(std::move(w));
  }
  return corpus;
}

FeatureVector workload_features(const Workload& w, const PlatformSpec& platform) {
  const StaticFeatures s = extract_static_features(w.kernel, w.params);
  const DynamicFeatures d = profile_dynamic_features(w.kernel, w.params, platform);
  FeatureVector f;
  f.values = {static_cast<double>(s.loop_nest),
              static_cast<double>(s.loop_count),
              static_cast<double>(s.xfer_mem_count),
              static_cast<double>(s.dts_bytes),
              static_cast<double>(s.redundant_transfer_bytes),
              static_cast<double>(s.max_blocks),
              static_cast<double>(s.min_task_unit),
              static_cast<double>(s.instruction_total),
              d.branch_miss_rate,
              d.l1_dcache_miss_rate};
  return f;
}

std::vector<StreamConfig> strided_configs(const ConfigGrid& grid, int stride) {
  grid.validate();
  if (stride < 1) throw DomainError("sample stride must be >= 1");
  std::vector<StreamConfig> out;
  for (int p = grid.partitions.lo; p <= grid.partitions.hi; p += stride) {
    for (int t = grid.tasks.lo; t <= grid.tasks.hi; t += stride) {
      if (t >= p) out.emplace_back(p, t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training data

std::uint64_t measurement_seed(std::uint64_t base, const std::string& workload_id, StreamConfig config) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : workload_id) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  h = mix(h ^ mix(base));
  h = mix(h ^ static_cast<std::uint64_t>(config.partitions()));
  return mix(h ^ (static_cast<std::uint64_t>(config.tasks()) << 32));
}

namespace {

double measured_runtime(const Corpus& corpus, const PreparedWorkload& prep, const std::string& id,
                        StreamConfig config) {
  std::optional<NoiseSpec> noise;
  if (corpus.noise.sigma > 0.0) noise = NoiseSpec{corpus.noise.sigma, measurement_seed(corpus.noise.seed, id, config)};
  return measure(prep, corpus.platform, config, noise, corpus.max_runs).mean_runtime;
}

}  // namespace

double measured_speedup(const Corpus& corpus, const Workload& w, StreamConfig config) {
  const PreparedWorkload prep = prepare_workload(w.kernel, w.params);
  return speedup(measured_runtime(corpus, prep, w.id, StreamConfig(1, 1)),
                 measured_runtime(corpus, prep, w.id, config));
}

Dataset gen_training_data(const Corpus& corpus, int stride, int jobs, std::ostream* log) {
  corpus.validate();
  const std::vector<StreamConfig> configs = strided_configs(corpus.grid, stride);
  const std::size_t n = corpus.workloads.size();
  std::vector<std::vector<Sample>> rows(n);
  std::vector<std::string> warnings(n);

  parallel_for(n, jobs, [&](std::size_t i) {
    const Workload& w = corpus.workloads[i];
    const PreparedWorkload prep = prepare_workload(w.kernel, w.params);
    const FeatureVector features = workload_features(w, corpus.platform);
    const double single = measured_runtime(corpus, prep, w.id, StreamConfig(1, 1));
    std::size_t skipped = 0;
    for (const auto& c : configs) {
      if (!fits(corpus.platform, c, prep.loop_count)) {
        ++skipped;
        continue;
      }
      rows[i].push_back({w.id, features, c, speedup(single, measured_runtime(corpus, prep, w.id, c))});
    }
    if (skipped > 0) {
      warnings[i] = "warning: skipped " + std::to_string(skipped) + " configuration(s) infeasible for '" + w.id + "'";
    }
  });

  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    if (log && !warnings[i].empty()) *log << warnings[i] << '\n';
    if (rows[i].empty()) continue;
    const auto best = std::max_element(rows[i].begin(), rows[i].end(),
                                       [](const Sample& a, const Sample& b) { return a.speedup < b.speedup; });
    data.oracles.push_back({corpus.workloads[i].id, best->config, best->speedup});
    data.samples.insert(data.samples.end(), std::make_move_iterator(rows[i].begin()),
                        std::make_move_iterator(rows[i].end()));
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples) {
  out << "workload_id";
  for (auto name : kRawFeatureNames) out << ',' << name;
  out << ",partitions,tasks,speedup\n";
  for (const auto& s : samples) {
    out << s.workload_id;
    for (double v : s.features.values) out << ',' << format_real(v);
    out << ',' << s.config.partitions() << ',' << s.config.tasks() << ',' << format_real(s.speedup) << '\n';
  }
}

std::vector<Sample> read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", 1, 1);
  std::ostringstream expected;
  write_dataset_csv(expected, {});
  std::string header = expected.str();
  header.pop_back();
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw SchemaError("dataset header does not match the expected columns");

  std::vector<Sample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != kRawFeatureCount + 4) {
      throw ParseError("expected " + std::to_string(kRawFeatureCount + 4) + " fields", line_no, 1);
    }
    try {
      Sample s;
      s.workload_id = std::string(fields[0]);
      for (std::size_t j = 0; j < kRawFeatureCount; ++j) s.features.values[j] = parse_real(fields[1 + j]);
      s.config = StreamConfig(static_cast<int>(parse_int(fields[kRawFeatureCount + 1], line_no)),
                              static_cast<int>(parse_int(fields[kRawFeatureCount + 2], line_no)));
      s.speedup = parse_real(fields[kRawFeatureCount + 3]);
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no, 1);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle and evaluation

GridOracle sweep_oracle(const Workload& w, const Corpus& corpus) {
  const PreparedWorkload prep = prepare_workload(w.kernel, w.params);
  GridOracle o;
  o.single_time = simulate_total(prep, corpus.platform, StreamConfig(1, 1));
  double best_time = 0.0;
  bool found = false;
  for (int p = corpus.grid.partitions.lo; p <= std::min(corpus.grid.partitions.hi, corpus.platform.total_cores); ++p) {
    const int t_hi = static_cast<int>(std::min<std::int64_t>(corpus.grid.tasks.hi, prep.loop_count));
    for (int t = std::max(p, corpus.grid.tasks.lo); t <= t_hi; ++t) {
      const double total = simulate_total(prep, corpus.platform, StreamConfig(p, t));
      if (!found || total < best_time) {
        best_time = total;
        o.best = StreamConfig(p, t);
        found = true;
      }
    }
  }
  if (!found) throw InfeasibleConfigError("no grid configuration is feasible for '" + w.id + "'");
  o.best_speedup = speedup(o.single_time, best_time);
  return o;
}

double true_speedup(const Workload& w, const Corpus& corpus, StreamConfig config) {
  const PreparedWorkload prep = prepare_workload(w.kernel, w.params);
  return speedup(simulate_total(prep, corpus.platform, StreamConfig(1, 1)),
                 simulate_total(prep, corpus.platform, config));
}

bool operator==(const ComparatorCell& a, const ComparatorCell& b) {
  return a.config == b.config && a.speedup == b.speedup && a.percent == b.percent && a.fallback == b.fallback;
}

bool operator==(const EvalRow& a, const EvalRow& b) {
  return a.workload_id == b.workload_id && a.oracle_config == b.oracle_config &&
         a.oracle_speedup == b.oracle_speedup && a.chosen == b.chosen && a.achieved_speedup == b.achieved_speedup &&
         a.percent == b.percent && a.fold_failed == b.fold_failed && a.comparators == b.comparators;
}

bool operator==(const EvalReport& a, const EvalReport& b) {
  return a.comparator_names == b.comparator_names && a.rows == b.rows;
}

std::vector<Sample> subsample(const std::vector<Sample>& rows, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n >= rows.size()) return rows;
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Sample> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<std::string> held_out_groups(const Corpus& corpus, const std::string& group) {
  std::vector<std::string> out{group};
  if (const auto it = corpus.siblings.find(group); it != corpus.siblings.end()) {
    for (const auto& g : it->second) {
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
  }
  return out;
}

namespace {

std::map<std::string, std::string> group_map(const Corpus& corpus) {
  std::map<std::string, std::string> out;
  for (const auto& w : corpus.workloads) out[w.id] = w.group;
  return out;
}

bool in_groups(const std::vector<std::string>& groups, const std::string& group) {
  return std::find(groups.begin(), groups.end(), group) != groups.end();
}

}  // namespace

std::vector<Sample> fold_training_set(const Corpus& corpus, const Dataset& data, const std::string& group,
                                      const EvalOptions& options) {
  const auto group_of = group_map(corpus);
  const std::vector<std::string> excluded = held_out_groups(corpus, group);
  std::vector<Sample> training;
  for (const auto& s : data.samples) {
    const auto it = group_of.find(s.workload_id);
    if (it == group_of.end()) throw SchemaError("dataset row for unknown workload '" + s.workload_id + "'");
    if (!in_groups(excluded, it->second)) training.push_back(s);
  }
  return subsample(training, options.max_train_rows, options.subsample_seed);
}

void audit_fold(const Corpus& corpus, const std::string& group, const std::vector<Sample>& training) {
  const auto group_of = group_map(corpus);
  const std::vector<std::string> excluded = held_out_groups(corpus, group);
  for (const auto& s : training) {
    const auto it = group_of.find(s.workload_id);
    if (it == group_of.end() || in_groups(excluded, it->second)) {
      throw InvariantError("held-out workload '" + s.workload_id + "' leaked into the training fold of '" + group +
                           "'");
    }
  }
}

EvalReport loocv(const Corpus& corpus, const Dataset& data, const EvalOptions& options, std::ostream* log) {
  corpus.validate();
  if (corpus.workloads.size() < 2) throw DomainError("cross-validation needs at least 2 workloads");

  std::vector<std::string> groups;
  for (const auto& w : corpus.workloads) {
    if (!in_groups(groups, w.group)) groups.push_back(w.group);
  }

  EvalReport report;
  report.rows.resize(corpus.workloads.size());
  std::vector<std::string> failures(groups.size());

  parallel_for(groups.size(), options.jobs, [&](std::size_t g) {
    const std::vector<Sample> training = fold_training_set(corpus, data, groups[g], options);
    audit_fold(corpus, groups[g], training);

    std::optional<PerfModel> model;
    try {
      model = train(training, options.mlp, options.train).model;
    } catch (const std::exception& e) {
      failures[g] = "fold '" + groups[g] + "' failed: " + e.what();
    }

    for (std::size_t i = 0; i < corpus.workloads.size(); ++i) {
      const Workload& w = corpus.workloads[i];
      if (w.group != groups[g]) continue;
      EvalRow& row = report.rows[i];
      row.workload_id = w.id;
      const GridOracle oracle = sweep_oracle(w, corpus);
      row.oracle_config = oracle.best;
      row.oracle_speedup = oracle.best_speedup;
      row.fold_failed = !model.has_value();
      row.chosen = model ? tune(*model, workload_features(w, corpus.platform), corpus.grid) : StreamConfig(1, 1);
      row.achieved_speedup = true_speedup(w, corpus, row.chosen);
      row.percent = 100.0 * row.achieved_speedup / row.oracle_speedup;
    }
  });

  if (log) {
    for (const auto& f : failures) {
      if (!f.empty()) *log << f << '\n';
    }
  }
  return report;
}

StreamConfig comparator_config(const std::string& name, const Workload& w, const Corpus& corpus, bool* fallback) {
  const PreparedWorkload prep = prepare_workload(w.kernel, w.params);
  const int max_partitions = std::min(corpus.grid.partitions.hi, corpus.platform.total_cores);
  const int max_tasks = static_cast<int>(std::min<std::int64_t>(corpus.grid.tasks.hi, prep.loop_count));
  bool fell_back = false;
  StreamConfig c(1, 1);
  try {
    if (name == kLiuName) {
      c = liu_optimal_tasks(fit_liu(prep, corpus.platform), max_tasks, max_partitions);
    } else if (name == kWerkhovenName) {
      c = werkhoven_optimal_tasks(fit_werkhoven(prep, corpus.platform), max_tasks, max_partitions);
    } else {
      c = fixed_config(name);
    }
  } catch (const NoSolutionError&) {
    fell_back = true;
  } catch (const InsufficientDataError&) {
    fell_back = true;
  } catch (const DomainError&) {
    if (name != kLiuName && name != kWerkhovenName) throw;
    fell_back = true;
  }
  if (!fell_back && !fits(corpus.platform, c, prep.loop_count)) {
    fell_back = true;
    c = StreamConfig(1, 1);
  }
  if (fell_back) c = StreamConfig(1, 1);
  if (fallback) *fallback = fell_back;
  return c;
}

EvalReport compare_baselines(const Corpus& corpus, const EvalReport& model_report, int jobs) {
  if (model_report.rows.size() != corpus.workloads.size()) {
    throw SchemaError("report rows do not match the corpus workloads");
  }
  EvalReport out = model_report;
  std::vector<std::string> names{kLiuName, kWerkhovenName};
  for (auto n : kFixedConfigNames) names.emplace_back(n);
  out.comparator_names.insert(out.comparator_names.end(), names.begin(), names.end());

  parallel_for(out.rows.size(), jobs, [&](std::size_t i) {
    const Workload& w = corpus.workloads[i];
    EvalRow& row = out.rows[i];
    if (row.workload_id != w.id) throw SchemaError("report row '" + row.workload_id + "' is out of corpus order");
    for (const auto& name : names) {
      ComparatorCell cell;
      cell.config = comparator_config(name, w, corpus, &cell.fallback);
      cell.speedup = true_speedup(w, corpus, cell.config);
      if (cell.speedup > row.oracle_speedup) {
        row.oracle_speedup = cell.speedup;
        row.oracle_config = cell.config;
      }
      row.comparators.push_back(cell);
    }
    row.percent = 100.0 * row.achieved_speedup / row.oracle_speedup;
    for (auto& cell : row.comparators) cell.percent = 100.0 * cell.speedup / row.oracle_speedup;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reports

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientDataError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw DomainError("percentile rank must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

ColumnSummary summarize_column(std::string name, const std::vector<double>& speedups,
                               const std::vector<double>& percents) {
  ColumnSummary s;
  s.name = std::move(name);
  s.geomean_speedup = geometric_mean(speedups);
  double sum = 0.0;
  for (double p : percents) sum += p;
  s.mean_percent = sum / static_cast<double>(percents.size());
  s.geomean_percent = geometric_mean(percents);
  for (double q : kReportPercentiles) s.percentiles.push_back(percentile(percents, q));
  return s;
}

}  // namespace

std::vector<ColumnSummary> summarize(const EvalReport& report) {
  if (report.rows.empty()) throw InsufficientDataError("report has no rows");
  std::vector<ColumnSummary> out;
  std::vector<double> sp, pc;
  for (const auto& r : report.rows) {
    sp.push_back(r.achieved_speedup);
    pc.push_back(r.percent);
  }
  out.push_back(summarize_column("model", sp, pc));
  for (std::size_t c = 0; c < report.comparator_names.size(); ++c) {
    sp.clear();
    pc.clear();
    for (const auto& r : report.rows) {
      sp.push_back(r.comparators.at(c).speedup);
      pc.push_back(r.comparators.at(c).percent);
    }
    out.push_back(summarize_column(report.comparator_names[c], sp, pc));
  }
  return out;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "text" || name == "table") return ReportFormat::kText;
  throw DomainError("unknown report format '" + name + "' (expected csv or text)");
}

namespace {

constexpr const char* kBaseColumns[] = {"workload_id",      "oracle_partitions", "oracle_tasks",
                                        "oracle_speedup",   "chosen_partitions", "chosen_tasks",
                                        "achieved_speedup", "percent_of_oracle", "fold_failed"};
constexpr const char* kCellSuffixes[] = {"_partitions", "_tasks", "_speedup", "_percent", "_fallback"};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void emit_csv(std::ostream& out, const EvalReport& report) {
  bool first = true;
  for (const char* c : kBaseColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  for (const auto& name : report.comparator_names) {
    for (const char* s : kCellSuffixes) out << ',' << name << s;
  }
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.workload_id << ',' << r.oracle_config.partitions() << ',' << r.oracle_config.tasks() << ','
        << format_real(r.oracle_speedup) << ',' << r.chosen.partitions() << ',' << r.chosen.tasks() << ','
        << format_real(r.achieved_speedup) << ',' << format_real(r.percent) << ',' << (r.fold_failed ? 1 : 0);
    for (const auto& c : r.comparators) {
      out << ',' << c.config.partitions() << ',' << c.config.tasks() << ',' << format_real(c.speedup) << ','
          << format_real(c.percent) << ',' << (c.fallback ? 1 : 0);
    }
    out << '\n';
  }
}

void emit_row(std::ostream& out, const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << "  ";
    const std::size_t pad = widths[i] - cells[i].size();
    if (i == 0) {
      out << cells[i] << std::string(pad, ' ');
    } else {
      out << std::string(pad, ' ') << cells[i];
    }
  }
  out << '\n';
}

void emit_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  for (const auto& r : rows) emit_row(out, r, widths);
}

void emit_text(std::ostream& out, const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"workload", "oracle", "oracle_speedup", "chosen", "speedup", "pct_oracle"};
  for (const auto& n : report.comparator_names) head.push_back(n);
  rows.push_back(head);
  for (const auto& r : report.rows) {
    std::vector<std::string> cells{r.workload_id + (r.fold_failed ? " (fold failed)" : ""),
                                   r.oracle_config.to_string(),
                                   fixed(r.oracle_speedup, 3),
                                   r.chosen.to_string(),
                                   fixed(r.achieved_speedup, 3),
                                   fixed(r.percent, 1)};
    for (const auto& c : r.comparators) {
      cells.push_back(c.config.to_string() + " " + fixed(c.percent, 1) + (c.fallback ? "*" : ""));
    }
    rows.push_back(std::move(cells));
  }
  emit_table(out, rows);
  if (report.rows.empty()) return;

  out << '\n';
  std::vector<std::vector<std::string>> agg;
  std::vector<std::string> agg_head{"column", "geomean_speedup", "mean_pct", "geomean_pct"};
  for (double q : kReportPercentiles) agg_head.push_back("p" + fixed(q, 0));
  agg.push_back(agg_head);
  for (const auto& s : summarize(report)) {
    std::vector<std::string> cells{s.name, fixed(s.geomean_speedup, 4), fixed(s.mean_percent, 2),
                                   fixed(s.geomean_percent, 2)};
    for (double p : s.percentiles) cells.push_back(fixed(p, 2));
    agg.push_back(std::move(cells));
  }
  emit_table(out, agg);
  if (!report.comparator_names.empty()) out << "\n* analytical model had no answer; fell back to (1,1)\n";
}

}  // namespace

void emit_report(std::ostream& out, const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    emit_csv(out, report);
  } else {
    emit_text(out, report);
  }
}

EvalReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report file", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split(line, ',');
  constexpr std::size_t kBase = std::size(kBaseColumns);
  constexpr std::size_t kCell = std::size(kCellSuffixes);
  if (head.size() < kBase || (head.size() - kBase) % kCell != 0) {
    throw SchemaError("report header has an unexpected column count");
  }
  for (std::size_t i = 0; i < kBase; ++i) {
    if (head[i] != kBaseColumns[i]) throw SchemaError("report column " + std::to_string(i + 1) + " is not '" +
                                                      kBaseColumns[i] + "'");
  }
  EvalReport report;
  for (std::size_t c = kBase; c < head.size(); c += kCell) {
    const std::string_view first = head[c];
    const std::string_view suffix = kCellSuffixes[0];
    if (first.size() <= suffix.size() || !first.ends_with(suffix)) {
      throw SchemaError("bad comparator column '" + std::string(first) + "'");
    }
    const std::string name(first.substr(0, first.size() - suffix.size()));
    for (std::size_t k = 0; k < kCell; ++k) {
      if (head[c + k] != name + kCellSuffixes[k]) throw SchemaError("bad comparator column '" +
                                                                    std::string(head[c + k]) + "'");
    }
    report.comparator_names.push_back(name);
  }

  std::size_t line_no = 1;
  auto flag = [&](std::string_view s) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw ParseError("expected 0 or 1", line_no, 1);
  };
  auto config = [&](std::string_view p, std::string_view t) {
    try {
      return StreamConfig(static_cast<int>(parse_int(p, line_no)), static_cast<int>(parse_int(t, line_no)));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != head.size()) throw ParseError("expected " + std::to_string(head.size()) + " fields", line_no, 1);
    try {
      EvalRow r;
      r.workload_id = std::string(f[0]);
      r.oracle_config = config(f[1], f[2]);
      r.oracle_speedup = parse_real(f[3]);
      r.chosen = config(f[4], f[5]);
      r.achieved_speedup = parse_real(f[6]);
      r.percent = parse_real(f[7]);
      r.fold_failed = flag(f[8]);
      for (std::size_t c = kBase; c < f.size(); c += kCell) {
        ComparatorCell cell;
        cell.config = config(f[c], f[c + 1]);
        cell.speedup = parse_real(f[c + 2]);
        cell.percent = parse_real(f[c + 3]);
        cell.fallback = flag(f[c + 4]);
        r.comparators.push_back(cell);
      }
      report.rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no, 1);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace streamtune
