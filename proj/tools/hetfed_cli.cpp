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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetfed/config.hpp"
#include "hetfed/errors.hpp"
#include "hetfed/orchestrator.hpp"
#include "hetfed/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

hetfed::ExperimentConfig load(const std::string &path, std::optional<std::uint64_t> seed) {
  auto loaded = hetfed::load_config(path);
  for (const auto &n : loaded.notices) std::cerr << "notice: " << n << "\n";
  if (seed) loaded.config.seed = *seed;
  return loaded.config;
}

std::filesystem::path out_dir(const hetfed::ExperimentConfig &config, const std::string &flag) {
  return flag.empty() ? std::filesystem::path(config.output_dir) : std::filesystem::path(flag);
}

void progress(const hetfed::RoundMetrics &m, std::size_t total) {
  if (m.round == 1 || m.round == total || m.round % 10 == 0) {
    std::fprintf(stderr, "round %zu/%zu acc=%.4f failures=%zu t=%.3fs\n", m.round, total,
                 m.accuracy, m.failures, m.sim_time_s);
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Heterogeneous federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto *run = app.add_subcommand("run", "Run one experiment");
  std::string save_ckpt;
  std::string load_ckpt;
  run->add_option("config", config_path, "Experiment file")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out, "Output directory");
  run->add_option("--save-checkpoint", save_ckpt, "Write the final global model");
  run->add_option("--load-checkpoint", load_ckpt, "Start from a saved global model");

  auto *sweep = app.add_subcommand("sweep", "Search-only epsilon / T_MAX utilization grid");
  std::vector<double> epsilons;
  std::vector<std::size_t> tmaxes;
  sweep->add_option("config", config_path, "Experiment file")->required();
  sweep->add_option("--seed", seed, "Override the master seed");
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--epsilon", epsilons, "Stop probabilities")->delimiter(',');
  sweep->add_option("--tmax", tmaxes, "Draw limits")->delimiter(',');

  auto *compare = app.add_subcommand("compare", "Run several strategies on shared streams");
  std::vector<std::string> strategies;
  compare->add_option("config", config_path, "Experiment file")->required();
  compare->add_option("--seed", seed, "Override the master seed");
  compare->add_option("--out", out, "Output directory");
  compare->add_option("--strategies", strategies, "Strategy names")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto config = load(config_path, seed);
    const auto dir = out_dir(config, out);

    if (run->parsed()) {
      hetfed::RunOptions options;
      if (!load_ckpt.empty()) {
        options.initial = hetfed::ParamStore::load(load_ckpt, config.space());
      }
      options.on_round = [&](const hetfed::RoundMetrics &m, const hetfed::ParamStore &) {
        progress(m, config.rounds);
      };
      const auto result = hetfed::run(config, options);
      hetfed::write_run_outputs(dir, result, config);
      if (!save_ckpt.empty()) result.store.save(save_ckpt);
      std::cout << "final accuracy " << result.summary.final_accuracy << "\n";
      return kExitOk;
    }

    if (sweep->parsed()) {
      if (epsilons.empty()) epsilons.push_back(config.epsilon);
      if (tmaxes.empty()) tmaxes.push_back(config.t_max);
      for (double e : epsilons) {
        if (!(e >= 0.0 && e <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
      }
      for (std::size_t t : tmaxes) {
        if (t == 0) throw UsageError("tmax must be positive");
      }
      std::vector<hetfed::SweepRow> rows;
      for (double e : epsilons) {
        for (std::size_t t : tmaxes) rows.push_back(hetfed::simulate_search(config, e, t));
      }
      std::filesystem::create_directories(dir);
      std::ofstream csv(dir / "sweep.csv", std::ios::binary);
      hetfed::write_sweep_csv(csv, rows);
      return kExitOk;
    }

    if (strategies.size() < 2) throw UsageError("compare needs at least two strategies");
    std::vector<hetfed::Strategy> parsed;
    for (const auto &s : strategies) {
      try {
        parsed.push_back(hetfed::parse_strategy(s));
      } catch (const hetfed::ContractError &) {
        throw UsageError("unknown strategy '" + s + "'");
      }
    }
    std::vector<hetfed::CompareRow> rows;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      auto c = config;
      c.strategy = parsed[i];
      std::cerr << "strategy " << hetfed::to_string(c.strategy) << "\n";
      const auto result = hetfed::run(c);
      hetfed::write_run_outputs(
          dir / (std::to_string(i) + "_" + std::string(hetfed::to_string(c.strategy))), result, c);
      rows.push_back({c.strategy, result.summary});
    }
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "compare.csv", std::ios::binary);
    hetfed::write_compare_csv(csv, rows);
    return kExitOk;
  } catch (const hetfed::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
