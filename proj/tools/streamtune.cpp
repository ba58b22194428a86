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

// streamtune: generate training data, train the performance model, tune
// workloads and evaluate against the analytical baselines.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "streamtune/baselines.hpp"
#include "streamtune/harness.hpp"

namespace {

using namespace streamtune;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct CommonFlags {
  std::string corpus = STREAMTUNE_CORPUS_DIR;
  std::string platform;
  std::string grid_partitions = "1..224";
  std::string grid_tasks = "1..256";
  std::uint64_t seed = 1;
  double noise_sigma = 0.02;
  std::string out;
  int jobs = 1;
};

const CLI::Validator kRangeCheck(
    [](std::string& text) -> std::string {
      try {
        const IntRange r = parse_range(text);
        if (r.lo < 1 || r.lo > r.hi) return "range must satisfy 1 <= A <= B";
      } catch (const ParseError& e) {
        return e.what();
      }
      return {};
    },
    "A..B");

const CLI::Validator kFormatCheck = CLI::IsMember({"csv", "text", "table"});

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--corpus", f.corpus, "Corpus directory holding a manifest")->capture_default_str();
  cmd->add_option("--platform", f.platform, "Platform file (default: <corpus>/xeonphi.platform)");
  cmd->add_option("--grid-partitions", f.grid_partitions, "Partition range A..B")
      ->check(kRangeCheck)
      ->capture_default_str();
  cmd->add_option("--grid-tasks", f.grid_tasks, "Task range A..B")->check(kRangeCheck)->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed of the measurement noise")->capture_default_str();
  cmd->add_option("--noise-sigma", f.noise_sigma, "Lognormal sigma of the measurement noise")
      ->capture_default_str();
  cmd->add_option("--out", f.out, "Output path (default: stdout)");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->capture_default_str();
}

std::string platform_path(const CommonFlags& f) {
  return f.platform.empty() ? (std::filesystem::path(f.corpus) / "xeonphi.platform").string() : f.platform;
}

ConfigGrid grid_from(const CommonFlags& f) {
  ConfigGrid g{parse_range(f.grid_partitions), parse_range(f.grid_tasks)};
  g.validate();
  return g;
}

Corpus corpus_from(const CommonFlags& f) {
  Corpus c = load_corpus(f.corpus);
  c.platform = load_platform(platform_path(f));
  c.grid = grid_from(f);
  c.noise = {f.noise_sigma, f.seed};
  c.validate();
  return c;
}

// Writes to --out or stdout.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  fn(out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || v < 1) {
      throw DomainError("bad hidden layer width '" + item + "'");
    }
    widths.push_back(v);
  }
  return widths;
}

const CLI::Validator kWidthsCheck(
    [](std::string& text) -> std::string {
      try {
        parse_widths(text);
      } catch (const DomainError& e) {
        return e.what();
      }
      return {};
    },
    "W,W,...");

struct TrainFlags {
  std::string hidden = "9,9,9";
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 7;
  double learning_rate = kEvalLearningRate;
  int epochs = kEvalEpochs;
  std::size_t batch_size = 32;
  std::size_t max_rows = kEvalTrainRows;
};

void add_train(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--hidden", f.hidden, "Hidden layer widths, comma separated")
      ->check(kWidthsCheck)
      ->capture_default_str();
  cmd->add_option("--init-seed", f.init_seed, "Weight initialization seed")->capture_default_str();
  cmd->add_option("--shuffle-seed", f.shuffle_seed, "Minibatch shuffle seed")->capture_default_str();
  cmd->add_option("--learning-rate", f.learning_rate, "Adam step size")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--max-rows", f.max_rows, "Training rows kept after subsampling (0 = all)")
      ->capture_default_str();
}

MlpSpec mlp_from(const TrainFlags& f) {
  MlpSpec spec;
  spec.hidden = parse_widths(f.hidden);
  spec.init_seed = f.init_seed;
  return spec;
}

TrainConfig train_config_from(const TrainFlags& f) {
  TrainConfig c;
  c.learning_rate = f.learning_rate;
  c.epochs = f.epochs;
  c.batch_size = f.batch_size;
  c.shuffle_seed = f.shuffle_seed;
  c.validate();
  return c;
}

ParamMap parse_bindings(const std::vector<std::string>& binds) {
  ParamMap params;
  for (const auto& b : binds) {
    const auto eq = b.find('=');
    if (eq == std::string::npos) throw DomainError("binding '" + b + "' is not NAME=VALUE");
    std::size_t pos = 0;
    const std::string value = b.substr(eq + 1);
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw DomainError("binding '" + b + "' has a non-integer value");
    params[b.substr(0, eq)] = v;
  }
  return params;
}

int run(int argc, char** argv) {
  CLI::App app{"Stream configuration tuner for heterogeneous many-core workloads"};
  app.require_subcommand(1);

  // gen-data
  CommonFlags gen_common;
  int gen_stride = 4;
  int gen_max_runs = 10;
  auto* gen = app.add_subcommand("gen-data", "Measure strided grid configurations of every corpus workload");
  add_common(gen, gen_common);
  gen->add_option("--stride", gen_stride, "Sampling stride on each grid axis")->capture_default_str();
  gen->add_option("--max-runs", gen_max_runs, "Measurement repetitions cap")->capture_default_str();

  // train
  std::string train_data;
  std::string train_out;
  std::uint64_t train_subsample_seed = 11;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Fit the performance model to a dataset");
  train_cmd->add_option("--data", train_data, "Dataset CSV from gen-data")->required();
  train_cmd->add_option("--out", train_out, "Model file to write")->required();
  train_cmd->add_option("--subsample-seed", train_subsample_seed, "Row subsampling seed")->capture_default_str();
  add_train(train_cmd, train_flags);

  // tune
  CommonFlags tune_common;
  std::string tune_model;
  std::string tune_kernel;
  std::vector<std::string> tune_binds;
  std::size_t tune_top = 1;
  auto* tune_cmd = app.add_subcommand("tune", "Rank stream configurations for one kernel");
  add_common(tune_cmd, tune_common);
  tune_cmd->add_option("--model", tune_model, "Model file from train")->required();
  tune_cmd->add_option("--kernel", tune_kernel, "Kernel file")->required();
  tune_cmd->add_option("--bind", tune_binds, "Parameter binding NAME=VALUE (repeatable)");
  tune_cmd->add_option("--top", tune_top, "Number of ranked configurations to print")->capture_default_str();

  // evaluate
  CommonFlags eval_common;
  TrainFlags eval_train;
  int eval_stride = 4;
  std::string eval_format = "csv";
  std::string eval_data;
  bool eval_no_baselines = false;
  auto* eval = app.add_subcommand("evaluate", "Leave-one-kernel-out evaluation against the oracle and baselines");
  add_common(eval, eval_common);
  add_train(eval, eval_train);
  eval->add_option("--stride", eval_stride, "Sampling stride for generated training data")->capture_default_str();
  eval->add_option("--data", eval_data, "Reuse a dataset CSV instead of generating one");
  eval->add_option("--format", eval_format, "Report format: csv or text")
      ->check(kFormatCheck)
      ->capture_default_str();
  eval->add_flag("--no-baselines", eval_no_baselines, "Skip the comparator columns");

  // baseline
  CommonFlags base_common;
  std::string base_name;
  std::string base_kernel;
  std::vector<std::string> base_binds;
  auto* base = app.add_subcommand("baseline", "Configuration chosen by an analytical model or fixed baseline");
  add_common(base, base_common);
  base->add_option("--name", base_name, "liu, werkhoven, phi_small, phi_best_avg, gpu_small or gpu_large")
      ->required();
  base->add_option("--kernel", base_kernel, "Kernel file")->required();
  base->add_option("--bind", base_binds, "Parameter binding NAME=VALUE (repeatable)");

  // report
  std::string report_in;
  std::string report_format = "text";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Re-emit an evaluation report");
  report->add_option("--in", report_in, "Report CSV from evaluate")->required();
  report->add_option("--format", report_format, "csv or text")->check(kFormatCheck)->capture_default_str();
  report->add_option("--out", report_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (gen->parsed()) {
    Corpus corpus = corpus_from(gen_common);
    corpus.max_runs = gen_max_runs;
    const Dataset data = gen_training_data(corpus, gen_stride, gen_common.jobs, &std::cerr);
    with_output(gen_common.out, [&](std::ostream& out) { write_dataset_csv(out, data.samples); });
    for (const auto& o : data.oracles) {
      std::cerr << o.workload_id << ": best sampled " << o.config.to_string() << " speedup "
                << format_real(o.speedup) << '\n';
    }
  } else if (train_cmd->parsed()) {
    auto in = open_input(train_data);
    const auto rows = subsample(read_dataset_csv(in), train_flags.max_rows, train_subsample_seed);
    const TrainResult result = train(rows, mlp_from(train_flags), train_config_from(train_flags));
    save_model(result.model, train_out);
    std::cerr << "trained on " << rows.size() << " rows, " << result.model.kept_features.size()
              << " features kept, " << result.model.pca.size() << " principal components, final loss "
              << format_real(result.loss_history.back()) << '\n';
  } else if (tune_cmd->parsed()) {
    const PerfModel model = load_model(tune_model);
    const PlatformSpec platform = load_platform(platform_path(tune_common));
    const Workload w{"target", "target", load_kernel(tune_kernel), parse_bindings(tune_binds)};
    const auto ranked = rank(model, workload_features(w, platform), grid_from(tune_common), tune_top);
    with_output(tune_common.out, [&](std::ostream& out) {
      for (const auto& r : ranked) out << r.config.to_string() << ' ' << format_real(r.predicted) << '\n';
    });
  } else if (eval->parsed()) {
    const Corpus corpus = corpus_from(eval_common);
    Dataset data;
    if (eval_data.empty()) {
      data = gen_training_data(corpus, eval_stride, eval_common.jobs, &std::cerr);
    } else {
      auto in = open_input(eval_data);
      data.samples = read_dataset_csv(in);
    }
    EvalOptions options;
    options.mlp = mlp_from(eval_train);
    options.train = train_config_from(eval_train);
    options.max_train_rows = eval_train.max_rows;
    options.jobs = eval_common.jobs;
    EvalReport result = loocv(corpus, data, options, &std::cerr);
    if (!eval_no_baselines) result = compare_baselines(corpus, result, eval_common.jobs);
    const ReportFormat format = parse_report_format(eval_format);
    with_output(eval_common.out, [&](std::ostream& out) { emit_report(out, result, format); });
  } else if (base->parsed()) {
    Corpus corpus;
    corpus.platform = load_platform(platform_path(base_common));
    corpus.grid = grid_from(base_common);
    const Workload w{"target", "target", load_kernel(base_kernel), parse_bindings(base_binds)};
    bool fallback = false;
    const StreamConfig c = comparator_config(base_name, w, corpus, &fallback);
    with_output(base_common.out, [&](std::ostream& out) {
      out << c.to_string() << " speedup " << format_real(true_speedup(w, corpus, c))
          << (fallback ? " (fallback)" : "") << '\n';
    });
  } else if (report->parsed()) {
    auto in = open_input(report_in);
    const EvalReport r = read_report_csv(in);
    const ReportFormat format = parse_report_format(report_format);
    with_output(report_out, [&](std::ostream& out) { emit_report(out, r, format); });
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const streamtune::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
