/**
 * Copyright 2026 The HetFed Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliResult run_cli(const std::string &args) {
  const std::string cmd = std::string(HETFED_CLI) + " " + args + " 2>&1";
  CliResult r;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (const std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const char *kTiny = R"(seed: 5
rounds: 4
strategy: flexible_search
clients:
  total: 6
  per_round: 3
  local_epochs: 1
  batch_size: 16
model:
  hidden_width: 8
  hidden_depth: 2
search:
  epsilon: 0.8
  t_max: 5
  ratios: [0, 0.5, 1]
distill:
  t_skd: 3
  k: 16
limitation:
  memory:
    min: 3
    max: 6
    unit: KB
  bandwidth:
    min: 1
    max: 12
    unit: Kbps
cost:
  comm_deadline_s: 1
data:
  classes: 4
  in_dim: 6
  per_class: 30
)";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hetfed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string &name, const std::string &text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return (dir_ / name).string();
  }
  std::string out(const std::string &name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, RunWritesArtifacts) {
  const auto cfg = write("exp.yaml", kTiny);
  const auto r = run_cli("run " + cfg + " --out " + out("o"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "o" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "assignments.csv"));
  const auto summary = slurp(dir_ / "o" / "summary.json");
  EXPECT_NE(summary.find("\"final_accuracy\""), std::string::npos);
  EXPECT_EQ(lines(slurp(dir_ / "o" / "metrics.csv")).size(), 5u);  // header + 4 rounds
  EXPECT_EQ(lines(slurp(dir_ / "o" / "assignments.csv")).size(), 13u);
}

TEST_F(Cli, DefaultedKeysPrintNotices) {
  const auto cfg = write("exp.yaml", kTiny);
  const auto r = run_cli("run " + cfg + " --out " + out("o"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("optimizer"), std::string::npos);
}

TEST_F(Cli, MisspelledSectionExitsTwoNamingIt) {
  const auto cfg = write("bad.yaml", std::string(kTiny) + "limittion:\n  memory:\n    min: 1\n");
  const auto r = run_cli("run " + cfg + " --out " + out("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("limittion"), std::string::npos);
  EXPECT_NE(r.output.find("line 34"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingConfigExitsTwo) {
  EXPECT_EQ(run_cli("run " + out("nope.yaml")).code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
}

TEST_F(Cli, SameSeedGivesByteIdenticalMetrics) {
  const auto cfg = write("exp.yaml", kTiny);
  ASSERT_EQ(run_cli("run " + cfg + " --out " + out("a")).code, 0);
  ASSERT_EQ(run_cli("run " + cfg + " --out " + out("b")).code, 0);
  ASSERT_EQ(run_cli("run " + cfg + " --seed 6 --out " + out("c")).code, 0);
  const auto a = slurp(dir_ / "a" / "metrics.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "assignments.csv"), slurp(dir_ / "b" / "assignments.csv"));
  EXPECT_NE(a, slurp(dir_ / "c" / "metrics.csv"));
}

TEST_F(Cli, CheckpointRoundTrip) {
  const auto cfg = write("exp.yaml", kTiny);
  ASSERT_EQ(run_cli("run " + cfg + " --out " + out("a") + " --save-checkpoint " + out("w.bin")).code, 0);
  ASSERT_TRUE(fs::exists(dir_ / "w.bin"));
  const auto r = run_cli("run " + cfg + " --out " + out("b") + " --load-checkpoint " + out("w.bin"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
  // a checkpoint for other dims is refused
  const auto other = write("other.yaml", std::string(kTiny).replace(std::string(kTiny).find("hidden_width: 8"), 15, "hidden_width: 9"));
  EXPECT_EQ(run_cli("run " + other + " --out " + out("c") + " --load-checkpoint " + out("w.bin")).code, 2);
}

TEST_F(Cli, CompareNeedsTwoStrategies) {
  const auto cfg = write("exp.yaml", kTiny);
  EXPECT_EQ(run_cli("compare " + cfg + " --out " + out("o") + " --strategies flexible_search").code, 2);
  EXPECT_EQ(run_cli("compare " + cfg + " --out " + out("o") + " --strategies flexible_search,fastest").code, 2);
}

TEST_F(Cli, CompareSameStrategyTwiceGivesIdenticalRows) {
  const auto cfg = write("exp.yaml", kTiny);
  const auto r = run_cli("compare " + cfg + " --out " + out("o") + " --strategies uniform_prune,uniform_prune");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "o" / "compare.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1], rows[2]);
}

TEST_F(Cli, CompareSharesRandomStreams) {
  const auto cfg = write("exp.yaml", kTiny);
  const auto r = run_cli("compare " + cfg + " --out " + out("o") +
                         " --strategies flexible_search,uniform_prune,fedavg_largest,fedavg_smallest,exclude_infeasible");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "o" / "compare.csv"));
  ASSERT_EQ(rows.size(), 6u);
  auto streams = [](const std::string &row) { return row.substr(row.rfind(',', row.rfind(',', row.rfind(',') - 1) - 1)); };
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_EQ(streams(rows[i]), streams(rows[1]));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "0_flexible_search" / "metrics.csv"));
}

TEST_F(Cli, CompareLargestBeatsSmallestWithoutLimits) {
  std::string text = kTiny;
  text.replace(text.find("rounds: 4"), 9, "rounds: 30");
  text.replace(text.find("ratios: [0, 0.5, 1]"), 19, "ratios: [0.125, 1]");
  text.replace(text.find("min: 3\n    max: 6"), 17, "min: 9e9\n    max: 9e9");
  text.replace(text.find("min: 1\n    max: 12"), 18, "min: 9e9\n    max: 9e9");
  const auto cfg = write("exp.yaml", text);
  const auto r = run_cli("compare " + cfg + " --out " + out("o") + " --strategies fedavg_largest,fedavg_smallest");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "o" / "compare.csv"));
  auto acc = [](const std::string &row) { return std::stod(row.substr(row.find(',') + 1)); };
  EXPECT_GE(acc(rows[1]), acc(rows[2]));
}

TEST_F(Cli, SweepSingleCellGrid) {
  const auto cfg = write("exp.yaml", kTiny);
  const auto r = run_cli("sweep " + cfg + " --out " + out("o") + " --epsilon 0.8 --tmax 5");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "o" / "sweep.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].substr(0, 6), "0.8,5,");
}

TEST_F(Cli, SweepUtilizationGrowsWithDrawsWhenNeverStopping) {
  std::string text = kTiny;
  text.replace(text.find("rounds: 4"), 9, "rounds: 200");
  const auto cfg = write("exp.yaml", text);
  const auto r = run_cli("sweep " + cfg + " --out " + out("o") + " --epsilon 0 --tmax 1,3,5,10");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "o" / "sweep.csv"));
  ASSERT_EQ(rows.size(), 5u);
  double prev_mem = 0.0, prev_bw = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string eps, tmax, mem, bw;
    std::getline(in, eps, ',');
    std::getline(in, tmax, ',');
    std::getline(in, mem, ',');
    std::getline(in, bw, ',');
    EXPECT_GE(std::stod(mem), prev_mem) << rows[i];
    EXPECT_GE(std::stod(bw), prev_bw) << rows[i];
    prev_mem = std::stod(mem);
    prev_bw = std::stod(bw);
  }
}

TEST_F(Cli, SweepRejectsBadLists) {
  const auto cfg = write("exp.yaml", kTiny);
  EXPECT_EQ(run_cli("sweep " + cfg + " --out " + out("o") + " --epsilon 1.5").code, 2);
  EXPECT_EQ(run_cli("sweep " + cfg + " --out " + out("o") + " --tmax 0").code, 2);
}

TEST_F(Cli, DivergentTrainingExitsOne) {
  const auto cfg = write("exp.yaml", std::string(kTiny) + "optimizer:\n  lr: 1e300\n");
  const auto r = run_cli("run " + cfg + " --out " + out("o"));
  EXPECT_EQ(r.code, 1) << r.output;
}

}  // namespace
