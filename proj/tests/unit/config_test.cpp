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

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "hetfed/config.hpp"
#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

const char *kFull = R"(seed: 7
rounds: 12
strategy: uniform_prune
output_dir: results
aggregation: uniform
clients:
  total: 8
  per_round: 3
  local_epochs: 2
  batch_size: 32
model:
  hidden_width: 16
  hidden_depth: 3
search:
  epsilon: 0.5
  t_max: 4
  ratios: [0.25, 0.5, 1]
distill:
  enabled: false
  uniform_prune: true
  n: 2
  t_skd: 10
  k: 32
  lr: 0.0001
  mode: gradient
limitation:
  memory:
    binary: true
    min: 4
    max: 8
    unit: GB
  bandwidth:
    log_path: [a.csv, b.csv]
    phase_offset_s: 30
    unit: Mbps
cost:
  bytes_per_param: 4
  train_overhead_factor: 2.5
  bytes_per_activation: 4
  comm_deadline_s: 2
  protocol_overhead_factor: 1.25
  train_kappa: 1e-7
  server_overhead_s: 0.05
data:
  classes: 5
  in_dim: 12
  per_class: 30
  partition: iid
  alpha: 1
  test_fraction: 0.25
optimizer:
  kind: adam
  lr: 0.002
  momentum: 0
  weight_decay: 0.0001
  beta1: 0.8
  beta2: 0.99
  epsilon: 1e-7
  milestones: [5, 9]
  gamma: 0.3
)";

std::size_t error_line(const std::string &text) {
  try {
    parse_config(text);
  } catch (const ConfigError &e) {
    return e.line();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return 0;
}

TEST(Config, ParsesEverySection) {
  const auto loaded = parse_config(kFull, "/data");
  const auto &c = loaded.config;
  EXPECT_TRUE(loaded.notices.empty()) << loaded.notices.front();
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.strategy, Strategy::kUniformPrune);
  EXPECT_EQ(c.weighting, AggregationWeighting::kUniform);
  EXPECT_EQ(c.clients_per_round, 3u);
  EXPECT_EQ(c.model.ratios, (std::vector<double>{0.25, 0.5, 1.0}));
  EXPECT_EQ(c.distill.config.mode, DistillMode::kSharedGradient);
  EXPECT_TRUE(c.distill.for_uniform_prune);
  EXPECT_EQ(c.distill.config.iterations, 10u);
  const auto &mem = std::get<RangeLimit>(c.limits.memory.source);
  EXPECT_TRUE(mem.binary);
  EXPECT_EQ(mem.max, 8.0);
  const auto &bw = std::get<TraceLimit>(c.limits.bandwidth.source);
  EXPECT_EQ(bw.log_paths, (std::vector<std::string>{"a.csv", "b.csv"}));
  EXPECT_EQ(bw.phase_offset_s, 30.0);
  EXPECT_EQ(c.cost.protocol_overhead_factor, 1.25);
  EXPECT_EQ(c.train_kappa, 1e-7);
  EXPECT_EQ(c.data.partition, PartitionScheme::kIid);
  EXPECT_EQ(c.train.optimizer.kind, nn::OptimizerKind::kAdam);
  EXPECT_EQ(c.train.milestones, (std::vector<std::size_t>{5, 9}));
  EXPECT_EQ(c.base_dir, std::filesystem::path("/data"));
}

TEST(Config, RoundTripsThroughSerialization) {
  const auto first = parse_config(kFull).config;
  const auto again = parse_config(serialize_config(first)).config;
  EXPECT_EQ(first, again);
  const auto defaults = parse_config("seed: 1\n").config;
  EXPECT_EQ(parse_config(serialize_config(defaults)).config, defaults);
}

TEST(Config, RoundTripKeepsAwkwardDoubles) {
  auto config = parse_config(kFull).config;
  config.epsilon = 0.1 + 0.2;
  config.train.optimizer.learning_rate = 1.0 / 3.0;
  EXPECT_EQ(parse_config(serialize_config(config)).config, config);
}

TEST(Config, MissingKeysAreDefaultedWithNotices) {
  const auto loaded = parse_config("seed: 2\n");
  EXPECT_EQ(loaded.config.rounds, ExperimentConfig{}.rounds);
  EXPECT_FALSE(loaded.notices.empty());
  bool mentions_rounds = false;
  for (const auto &n : loaded.notices) mentions_rounds |= n.find("rounds") != std::string::npos;
  EXPECT_TRUE(mentions_rounds);
}

TEST(Config, UnknownKeyIsRejectedWithItsLine) {
  const std::string text = "seed: 1\nlimittion:\n  memory:\n    min: 1\n";
  try {
    parse_config(text);
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("limittion"), std::string::npos);
  }
  EXPECT_EQ(error_line("seed: 1\nclients:\n  total: 4\n  per_rnd: 2\n"), 4u);
}

TEST(Config, BadValuesReportTheirLine) {
  EXPECT_EQ(error_line("seed: 1\nrounds: many\n"), 2u);
  EXPECT_EQ(error_line("seed: 1\nrounds: -3\n"), 2u);
  EXPECT_EQ(error_line("seed: 1\nstrategy: fastest\n"), 2u);
  EXPECT_EQ(error_line("seed: 1\ndata:\n  partition: zipf\n"), 3u);
}

TEST(Config, AnchorsAndAliasesAreRejected) {
  EXPECT_EQ(error_line("seed: 1\nmodel: &m\n  hidden_width: 4\n"), 2u);
  EXPECT_EQ(error_line("seed: 1\nsearch:\n  ratios: *r\n"), 3u);
  // a literal asterisk inside a quoted string is not an alias
  EXPECT_NO_THROW(parse_config("seed: 1\noutput_dir: \"out*\"\n"));
}

TEST(Config, SemanticErrorsAreConfigErrors) {
  EXPECT_THROW(parse_config("clients:\n  total: 2\n  per_round: 3\n"), ConfigError);
  EXPECT_THROW(parse_config("search:\n  ratios: [0.5, 0.25, 1]\n"), ConfigError);
  EXPECT_THROW(parse_config("limitation:\n  memory:\n    min: 5\n    max: 1\n    unit: GB\n"), ConfigError);
  EXPECT_THROW(parse_config("limitation:\n  memory:\n    min: 1\n    max: 2\n    unit: furlongs\n"), ConfigError);
  EXPECT_THROW(parse_config("seed: [1\n"), ConfigError);
}

TEST(Config, LoadResolvesAgainstFileDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "hetfed_cfg_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "exp.yaml";
  std::ofstream(path) << "seed: 4\n";
  EXPECT_EQ(load_config(path).config.base_dir, dir);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_config(dir / "missing.yaml"), ConfigError);
}

}  // namespace
}  // namespace hetfed
