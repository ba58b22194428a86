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
#include <cmath>
#include <set>
#include <sstream>

#include "streamtune/harness.hpp"
#include "streamtune/random.hpp"
#include "test_support.hpp"

using namespace streamtune;

namespace {

Workload reference_workload(const std::string& group, std::int64_t n, int index = 0) {
  return {group + "/" + std::to_string(index), group, testing::reference_kernel(), {{"N", n}}};
}

Corpus small_corpus() {
  Corpus c;
  c.workloads = {reference_workload("a", 64), reference_workload("b", 128)};
  c.platform = testing::reference_platform();
  c.grid = {{1, 2}, {1, 3}};
  c.noise = {0.02, 1};
  c.max_runs = 10;
  return c;
}

EvalReport sample_report() {
  EvalReport r;
  r.comparator_names = {"liu", "phi_small"};
  Rng rng(4);
  for (int i = 0; i < 6; ++i) {
    EvalRow row;
    row.workload_id = "k" + std::to_string(i) + "/0";
    row.oracle_config = StreamConfig(1 + i, 2 + 3 * i);
    row.oracle_speedup = 1.0 + rng.uniform();
    row.chosen = StreamConfig(1, 1 + i);
    row.achieved_speedup = row.oracle_speedup * rng.uniform(0.5, 1.0);
    row.percent = 100.0 * row.achieved_speedup / row.oracle_speedup;
    row.fold_failed = i == 3;
    for (int c = 0; c < 2; ++c) {
      ComparatorCell cell;
      cell.config = StreamConfig(2, 2 + c);
      cell.speedup = row.oracle_speedup * rng.uniform(0.3, 1.0);
      cell.percent = 100.0 * cell.speedup / row.oracle_speedup;
      cell.fallback = c == 0 && i == 2;
      row.comparators.push_back(cell);
    }
    r.rows.push_back(row);
  }
  return r;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  return pearson(ra, rb);
}

}  // namespace

TEST_CASE("corpus loads") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  CHECK(corpus.workloads.size() == 120);
  CHECK(corpus.platform == load_platform(testing::corpus_path("xeonphi.platform")));
  std::set<std::string> ids;
  std::set<std::string> groups;
  for (const auto& w : corpus.workloads) {
    ids.insert(w.id);
    groups.insert(w.group);
    CHECK(extract_static_features(w.kernel, w.params).loop_count >= 10000);
  }
  CHECK(ids.size() == 120);
  CHECK(groups.size() == 30);
  CHECK(corpus.platform.total_cores == 224);
}

TEST_CASE("corpus validation") {
  auto c = small_corpus();
  c.workloads.push_back(c.workloads.front());
  CHECK_THROWS_AS(c.validate(), SchemaError);
  CHECK_THROWS_AS(load_corpus("/nonexistent"), std::exception);
}

TEST_CASE("stride 1 over five configurations and two workloads gives ten rows") {
  const auto corpus = small_corpus();
  const auto data = gen_training_data(corpus, 1);
  CHECK(data.samples.size() == 10);
  CHECK(data.oracles.size() == 2);
}

TEST_CASE("noise-free rows equal the simulator ratio") {
  auto corpus = small_corpus();
  corpus.noise.sigma = 0.0;
  const auto data = gen_training_data(corpus, 1);
  for (const auto& s : data.samples) {
    const auto& w = s.workload_id == "a/0" ? corpus.workloads[0] : corpus.workloads[1];
    const auto single = simulate(w.kernel, w.params, corpus.platform, {1, 1}).breakdown.total;
    const auto multi = simulate(w.kernel, w.params, corpus.platform, s.config).breakdown.total;
    CHECK(s.speedup == single / multi);
  }
}

TEST_CASE("noisy rows equal independently repeated measurements") {
  const auto corpus = small_corpus();
  const auto data = gen_training_data(corpus, 1);
  for (const auto& s : data.samples) {
    const auto& w = s.workload_id == "a/0" ? corpus.workloads[0] : corpus.workloads[1];
    const auto prep = prepare_workload(w.kernel, w.params);
    const auto at = [&](StreamConfig c) {
      return measure(prep, corpus.platform, c, NoiseSpec{0.02, measurement_seed(1, w.id, c)}, 10).mean_runtime;
    };
    CHECK(s.speedup == at({1, 1}) / at(s.config));
    CHECK(s.features == workload_features(w, corpus.platform));
  }
}

TEST_CASE("oracle is the argmax over rows") {
  const auto corpus = small_corpus();
  const auto data = gen_training_data(corpus, 1);
  for (const auto& o : data.oracles) {
    double best = 0.0;
    for (const auto& s : data.samples) {
      if (s.workload_id == o.workload_id) best = std::max(best, s.speedup);
    }
    CHECK(o.speedup == best);
  }
}

TEST_CASE("infeasible configurations are skipped with a warning") {
  auto corpus = small_corpus();
  corpus.grid = {{1, 16}, {1, 16}};
  std::ostringstream log;
  const auto data = gen_training_data(corpus, 1, 1, &log);
  for (const auto& s : data.samples) CHECK(s.config.partitions() <= 8);
  CHECK(log.str().find("skipped") != std::string::npos);
}

TEST_CASE("generation is deterministic across job counts") {
  const auto corpus = small_corpus();
  const auto a = gen_training_data(corpus, 1, 1);
  const auto b = gen_training_data(corpus, 1, 2);
  std::ostringstream sa;
  std::ostringstream sb;
  write_dataset_csv(sa, a.samples);
  write_dataset_csv(sb, b.samples);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("dataset csv round trip") {
  const auto data = gen_training_data(small_corpus(), 1);
  std::stringstream ss;
  write_dataset_csv(ss, data.samples);
  const std::string header = ss.str().substr(0, ss.str().find('\n'));
  CHECK(header.rfind("workload_id,loop_nest,loop_count,", 0) == 0);
  CHECK(header.find(",partitions,tasks,speedup") != std::string::npos);
  const auto back = read_dataset_csv(ss);
  REQUIRE(back.size() == data.samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].workload_id == data.samples[i].workload_id);
    CHECK(back[i].features == data.samples[i].features);
    CHECK(back[i].config == data.samples[i].config);
    CHECK(back[i].speedup == data.samples[i].speedup);
  }
  std::istringstream bad("workload_id,foo\nx,1\n");
  CHECK_THROWS(read_dataset_csv(bad));
}

TEST_CASE("strided configurations") {
  const auto all = strided_configs({{1, 4}, {1, 8}}, 1);
  CHECK(all == enumerate({{1, 4}, {1, 8}}));
  const std::vector<StreamConfig> expected{{1, 1}, {1, 3}, {1, 5}, {1, 7}, {3, 3}, {3, 5}, {3, 7}};
  CHECK(strided_configs({{1, 4}, {1, 8}}, 2) == expected);
}

TEST_CASE("held-out groups include siblings") {
  auto corpus = small_corpus();
  corpus.workloads.push_back(reference_workload("c", 96));
  corpus.siblings["a"] = {"c"};
  corpus.siblings["c"] = {"a"};
  CHECK(held_out_groups(corpus, "a") == std::vector<std::string>{"a", "c"});
  CHECK(held_out_groups(corpus, "b") == std::vector<std::string>{"b"});

  const auto data = gen_training_data(corpus, 1);
  const auto training = fold_training_set(corpus, data, "a", EvalOptions{});
  CHECK(training.size() == 5);
  for (const auto& s : training) CHECK(s.workload_id == "b/0");
  CHECK_NOTHROW(audit_fold(corpus, "a", training));
}

TEST_CASE("audit catches a leaked row") {
  const auto corpus = small_corpus();
  const auto data = gen_training_data(corpus, 1);
  auto training = fold_training_set(corpus, data, "a", EvalOptions{});
  training.push_back(data.samples.front());
  CHECK_THROWS_AS(audit_fold(corpus, "a", training), InvariantError);
}

TEST_CASE("subsample is deterministic and bounded") {
  const auto data = gen_training_data(small_corpus(), 1);
  CHECK(subsample(data.samples, 0, 1).size() == 10);
  CHECK(subsample(data.samples, 100, 1).size() == 10);
  const auto a = subsample(data.samples, 4, 9);
  const auto b = subsample(data.samples, 4, 9);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i].config == b[i].config);
}

TEST_CASE("corpus of identical workloads reaches the oracle in every fold") {
  Corpus c;
  for (const char* g : {"x", "y", "z"}) c.workloads.push_back(reference_workload(g, 256));
  c.platform = testing::reference_platform();
  c.grid = {{1, 2}, {1, 8}};
  c.noise.sigma = 0.0;
  const auto data = gen_training_data(c, 1);
  EvalOptions options;
  options.train.epochs = 3000;
  std::ostringstream log;
  const auto report = loocv(c, data, options, &log);
  CHECK(log.str().empty());
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK_FALSE(row.fold_failed);
    CHECK(row.chosen == row.oracle_config);
    CHECK(row.percent == 100.0);
  }
}

TEST_CASE("cross-validation needs two workloads") {
  auto c = small_corpus();
  c.workloads.resize(1);
  CHECK_THROWS_AS(loocv(c, Dataset{}, EvalOptions{}), DomainError);
}

TEST_CASE("fixed configuration at the oracle scores 100 percent") {
  auto c = small_corpus();
  c.workloads = {reference_workload("a", 64), reference_workload("b", 64, 1)};
  c.grid = {{4, 4}, {16, 16}};
  EvalReport model;
  for (const auto& w : c.workloads) {
    const auto o = sweep_oracle(w, c);
    CHECK(o.best == StreamConfig(4, 16));
    EvalRow row;
    row.workload_id = w.id;
    row.oracle_config = o.best;
    row.oracle_speedup = o.best_speedup;
    row.chosen = o.best;
    row.achieved_speedup = o.best_speedup;
    model.rows.push_back(row);
  }
  const auto report = compare_baselines(c, model);
  const auto col = std::find(report.comparator_names.begin(), report.comparator_names.end(), "phi_small") -
                   report.comparator_names.begin();
  for (const auto& row : report.rows) {
    CHECK(row.comparators[static_cast<std::size_t>(col)].config == StreamConfig(4, 16));
    if (row.oracle_config == StreamConfig(4, 16)) CHECK(row.comparators[static_cast<std::size_t>(col)].percent == 100.0);
    for (const auto& cell : row.comparators) CHECK(cell.percent <= 100.0);
    CHECK(row.percent <= 100.0);
  }
}

TEST_CASE("transfer-dominated workload gets (2,2) from the liu comparator") {
  auto c = small_corpus();
  c.platform.core_instruction_rate = 1e12;
  c.grid = {{1, 8}, {1, 64}};
  bool fallback = true;
  CHECK(comparator_config(kLiuName, c.workloads[0], c, &fallback) == StreamConfig(2, 2));
  CHECK_FALSE(fallback);
}

TEST_CASE("comparators fall back to (1,1) outside the platform") {
  auto c = small_corpus();
  bool fallback = false;
  CHECK(comparator_config("phi_best_avg", c.workloads[0], c, &fallback) == StreamConfig(1, 1));
  CHECK(fallback);
  CHECK_THROWS_AS(comparator_config("nonsense", c.workloads[0], c, &fallback), DomainError);
}

TEST_CASE("percentile interpolates linearly") {
  const std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(percentile(v, 50) == 3.0);
  CHECK(percentile(v, 10) == doctest::Approx(1.4));
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 5.0);
  CHECK(percentile({7.0}, 90) == 7.0);
  CHECK_THROWS_AS(percentile({}, 50), InsufficientDataError);
}

TEST_CASE("aggregates are derivable from rows") {
  const auto r = sample_report();
  const auto s = summarize(r);
  REQUIRE(s.size() == 3);
  std::vector<double> speedups;
  std::vector<double> percents;
  for (const auto& row : r.rows) {
    speedups.push_back(row.achieved_speedup);
    percents.push_back(row.percent);
  }
  CHECK(s[0].geomean_speedup == doctest::Approx(geometric_mean(speedups)));
  double mean = 0.0;
  for (double p : percents) mean += p / static_cast<double>(percents.size());
  CHECK(s[0].mean_percent == doctest::Approx(mean));
  CHECK(s[0].geomean_percent == doctest::Approx(geometric_mean(percents)));
  REQUIRE(s[0].percentiles.size() == 5);
  CHECK(s[0].percentiles[2] == doctest::Approx(percentile(percents, 50)));
  CHECK(s[1].name == "liu");
}

TEST_CASE("report emission is deterministic and round-trips") {
  const auto r = sample_report();
  for (auto format : {ReportFormat::kCsv, ReportFormat::kText}) {
    std::ostringstream a;
    std::ostringstream b;
    emit_report(a, r, format);
    emit_report(b, r, format);
    CHECK(a.str() == b.str());
  }
  std::stringstream csv;
  emit_report(csv, r, ReportFormat::kCsv);
  CHECK(read_report_csv(csv) == r);
}

TEST_CASE("report without comparators") {
  auto r = sample_report();
  r.comparator_names.clear();
  for (auto& row : r.rows) row.comparators.clear();
  std::stringstream csv;
  emit_report(csv, r, ReportFormat::kCsv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  CHECK(text.rfind("workload_id,oracle_partitions,oracle_tasks,oracle_speedup,chosen_partitions,chosen_tasks,"
                   "achieved_speedup,percent_of_oracle,fold_failed\n",
                   0) == 0);
  CHECK(read_report_csv(csv) == r);
}

TEST_CASE("report formats") {
  CHECK(parse_report_format("csv") == ReportFormat::kCsv);
  CHECK(parse_report_format("text") == ReportFormat::kText);
  CHECK(parse_report_format("table") == ReportFormat::kText);
  CHECK_THROWS_AS(parse_report_format("xml"), DomainError);
}

TEST_CASE("parallel_for propagates exceptions") {
  std::vector<int> hit(50, 0);
  parallel_for(hit.size(), 3, [&](std::size_t i) { hit[i] = 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 50);
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw DomainError("boom");
                  }),
                  DomainError);
}

TEST_CASE("held-out predictions rank like the simulator") {
  const auto corpus = load_corpus(testing::corpus_path(""));
  const auto data = gen_training_data(corpus, 8);
  Rng rng(100);
  const auto grid = enumerate(corpus.grid);
  std::vector<StreamConfig> probe;
  for (int i = 0; i < 100; ++i) probe.push_back(grid[rng.below(grid.size())]);
  for (const std::string group : {"nbody", "jacobi_1d", "stencil_1d"}) {
    const auto training = fold_training_set(corpus, data, group, EvalOptions{});
    const auto model = train(training, {}, eval_train_config()).model;
    const auto it = std::find_if(corpus.workloads.begin(), corpus.workloads.end(),
                                 [&](const Workload& w) { return w.group == group; });
    const auto workload = model.encode_workload(workload_features(*it, corpus.platform));
    std::vector<double> predicted;
    std::vector<double> simulated;
    for (const auto& c : probe) {
      predicted.push_back(model.predict_speedup(workload, c));
      simulated.push_back(true_speedup(*it, corpus, c));
    }
    CAPTURE(group);
    CHECK(spearman(predicted, simulated) > 0.8);
  }
}
