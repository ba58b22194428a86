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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "streamtune/harness.hpp"
#include "test_support.hpp"

using namespace streamtune;

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "streamtune_cli_test";

// Small grid so the full pipeline stays quick.
const std::string kGrid = " --grid-partitions 1..4 --grid-tasks 1..16";

int run(const std::string& args, const std::string& out_file = "") {
  const std::string log = (kWork / "stderr.txt").string();
  std::string cmd = std::string(STREAMTUNE_CLI) + " " + args;
  cmd += out_file.empty() ? " > /dev/null" : " > " + (kWork / out_file).string();
  cmd += " 2> " + log;
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& name) {
  std::ifstream in(kWork / name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct WorkDir {
  WorkDir() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  ~WorkDir() { fs::remove_all(kWork); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  WorkDir dir;
  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  CHECK(run("tune --kernel x") == 1);
  CHECK(run("baseline --name liu --kernel x --grid-tasks 5..x") == 1);
  CHECK(run("baseline --name liu --kernel x --grid-tasks 9..3") == 1);
  CHECK(run("report --in x --format xml") == 1);
  CHECK(run("train --data x --out y --hidden 9,,9") == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("data errors exit with 2") {
  WorkDir dir;
  CHECK(run("report --in /nonexistent/report.csv") == 2);
  CHECK(run("tune --model /nonexistent/model.pmdl --kernel " + testing::corpus_path("kernels/saxpy.kernel")) == 2);
  {
    std::ofstream bad(kWork / "bad.kernel");
    bad << "kernel bad\nparam N\nloop i N parallel\ntransfer q\n";
  }
  CHECK(run("baseline --name liu --kernel " + (kWork / "bad.kernel").string() + " --bind N=100000") == 2);
  CHECK(run("baseline --name nonsense --kernel " + testing::corpus_path("kernels/saxpy.kernel") +
            " --bind N=100000") == 2);
}

TEST_CASE("baseline subcommand") {
  WorkDir dir;
  REQUIRE(run("baseline --name phi_small --kernel " + testing::corpus_path("kernels/saxpy.kernel") +
                  " --bind N=100000",
              "out.txt") == 0);
  CHECK(slurp("out.txt").rfind("(4,16) speedup ", 0) == 0);
}

TEST_CASE("gen-data, train, tune, evaluate and report") {
  WorkDir dir;
  const std::string data = (kWork / "data.csv").string();
  const std::string model = (kWork / "model.pmdl").string();
  const std::string report = (kWork / "report.csv").string();

  REQUIRE(run("gen-data --stride 2" + kGrid + " --out " + data) == 0);
  std::ifstream in(data);
  const auto rows = read_dataset_csv(in);
  CHECK(rows.size() == 120 * strided_configs({{1, 4}, {1, 16}}, 2).size());

  REQUIRE(run("train --data " + data + " --out " + model + " --epochs 3") == 0);
  REQUIRE(run("tune --model " + model + " --kernel " + testing::corpus_path("kernels/saxpy.kernel") +
                  " --bind N=100000 --top 3" + kGrid,
              "tune.txt") == 0);
  const std::string tuned = slurp("tune.txt");
  CHECK(std::count(tuned.begin(), tuned.end(), '\n') == 3);
  CHECK(tuned.front() == '(');

  REQUIRE(run("evaluate --data " + data + " --epochs 2 --max-rows 500" + kGrid + " --out " + report) == 0);
  std::ifstream rin(report);
  const auto parsed = read_report_csv(rin);
  CHECK(parsed.rows.size() == 120);
  CHECK(parsed.comparator_names.size() == 6);

  REQUIRE(run("report --in " + report + " --format text", "table.txt") == 0);
  const std::string table = slurp("table.txt");
  CHECK(table.find("mean_pct") != std::string::npos);
  REQUIRE(run("report --in " + report + " --format csv", "again.csv") == 0);
  std::ifstream original(report);
  std::stringstream ss;
  ss << original.rdbuf();
  CHECK(slurp("again.csv") == ss.str());
}
