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

#ifndef HETFED_ORCHESTRATOR_HPP_
#define HETFED_ORCHESTRATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetfed/constrained_search.hpp"
#include "hetfed/cost_model.hpp"
#include "hetfed/fed_data.hpp"
#include "hetfed/hetero_agg.hpp"
#include "hetfed/inplace_distill.hpp"
#include "hetfed/nn.hpp"
#include "hetfed/param_store.hpp"
#include "hetfed/resource_sim.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {

enum class Strategy {
  kFlexibleSearch,  // largest feasible subnet via constrained search
  kUniformPrune,  // largest feasible uniform-width subnet
  kFedAvgLargest,  // full model for everyone, budgets ignored
  kFedAvgSmallest,  // smallest model for everyone, budgets ignored
  kExcludeInfeasible,  // full model, clients that cannot run it sit out
};

std::string_view to_string(Strategy s);
/// Throws ContractError on an unknown name.
Strategy parse_strategy(std::string_view name);

struct DataConfig {
  int classes = 10;
  nn::Index in_dim = 32;
  std::size_t per_class = 200;
  PartitionScheme partition = PartitionScheme::kDirichlet;
  double alpha = 0.1;
  double test_fraction = 0.1;
  std::string csv_path;  // optional dataset import instead of synthetic data

  bool operator==(const DataConfig &) const = default;
};

struct ModelConfig {
  nn::Index hidden_width = 64;
  std::size_t hidden_depth = 4;
  std::vector<double> ratios{0.0, 0.5, 1.0};

  bool operator==(const ModelConfig &) const = default;
};

struct TrainConfig {
  nn::OptimizerConfig optimizer;
  /// Rounds (0-based) at which the learning rate is multiplied by `gamma`.
  /// Empty means 60% and 85% of the run.
  std::vector<std::size_t> milestones;
  double gamma = 0.1;

  bool operator==(const TrainConfig &) const = default;
};

struct DistillSettings {
  bool enabled = true;  // for flexible_search
  bool for_uniform_prune = false;
  DistillConfig config{.subnets = 0};  // subnets == 0 means clients_per_round

  bool operator==(const DistillSettings &) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t clients = 20;
  std::size_t clients_per_round = 5;
  std::size_t local_epochs = 5;
  std::size_t rounds = 150;
  std::size_t batch_size = 64;
  Strategy strategy = Strategy::kFlexibleSearch;
  double epsilon = 0.8;
  std::size_t t_max = 5;
  ModelConfig model;
  TrainConfig train;
  DistillSettings distill;
  LimitSpec limits;
  CostParams cost;
  /// Seconds of simulated device time per parameter per local step.
  double train_kappa = 1e-8;
  /// Fixed simulated server time per round, plus distillation work at train_kappa.
  double server_overhead_s = 0.01;
  DataConfig data;
  AggregationWeighting weighting = AggregationWeighting::kDataShare;
  std::string output_dir = "out";

  /// Directory relative trace paths resolve against. Not part of the file format.
  std::filesystem::path base_dir;

  SearchSpace space() const;
  /// Throws ContractError with the offending setting.
  void validate() const;
  std::vector<std::size_t> effective_milestones() const;
  double learning_rate_at(std::size_t round) const;
  std::size_t distill_subnets() const;
  bool distills() const;

  bool operator==(const ExperimentConfig &other) const;
};

/// Per-client row of a round.
struct ClientRecord {
  std::size_t round = 0;
  std::size_t client = 0;
  SubnetSpec spec;
  std::size_t param_count = 0;
  Budget budget;
  std::optional<double> mem_util;  // missing when the budget is 0
  std::optional<double> bw_util;
  std::size_t random_tries = 0;
  bool hit_tmax = false;
  bool searched = false;  // a search call produced this assignment
  bool feasible = true;  // at assignment time
  bool excluded = false;  // never trained (exclude_infeasible)
  bool failed = false;
  double train_loss = 0.0;  // mean local minibatch loss, 0 if not trained
};

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  double accuracy = 0.0;
  std::optional<double> train_loss;  // mean over aggregated clients
  std::optional<double> mean_mem_util;
  std::optional<double> mean_bw_util;
  std::optional<double> hit_rate;  // only when searches ran
  std::size_t failures = 0;
  std::size_t excluded = 0;
  std::size_t aggregated = 0;
  double sim_time_s = 0.0;  // clock at the end of the round
  std::optional<DistillReport> distill;
  std::vector<ClientRecord> clients;
};

/// Fingerprints of the random streams a run consumed.
struct StreamDigests {
  std::uint64_t selection = 0;
  std::uint64_t budgets = 0;
  std::uint64_t partition = 0;
};

struct RunSummary {
  double final_accuracy = 0.0;
  double mean_mem_util = 0.0;
  double mean_bw_util = 0.0;
  std::optional<double> hit_rate;
  std::size_t failures = 0;
  std::size_t excluded = 0;
  double sim_time_s = 0.0;
  StreamDigests digests;
};

struct RunResult {
  std::vector<RoundMetrics> rounds;
  ParamStore store;
  RunSummary summary;
};

/// Client data as the server-side simulation sees it.
struct ExperimentData {
  std::vector<ClientDataset> clients;  // standardized per client
  std::vector<double> weights;  // |D_i| / sum |D_j|
  Dataset test;  // standardized with the pooled training moments
  std::uint64_t partition_digest = 0;
};

/// Builds the dataset, partition and test split from the config's data stream.
ExperimentData prepare_data(const ExperimentConfig &config);

/// Initial global parameters (init stream).
ParamStore initial_store(const ExperimentConfig &config);

/// Uniform sample of clients_per_round ids without replacement, sorted.
std::vector<std::size_t> select_clients(const ExperimentConfig &config, std::size_t round);

/// Stream that shuffles one client's minibatches in one round.
RandomEngine client_train_stream(const ExperimentConfig &config, std::size_t round,
                                 std::size_t client);

struct LocalTrainResult {
  nn::MlpModel model;
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

/// `epochs` passes of minibatch cross-entropy. Each epoch reshuffles the
/// sample order with std::shuffle on `rng`; the last batch may be short.
LocalTrainResult local_train(nn::MlpModel model, const Dataset &data, std::size_t epochs,
                             std::size_t batch, const nn::OptimizerConfig &optimizer,
                             RandomEngine &rng);

/// Top-1 accuracy of the full global model.
double evaluate(const ParamStore &store, const SearchSpace &space, const Dataset &test);
/// Top-1 accuracy of one subnet of the global model.
double evaluate(const ParamStore &store, const SearchSpace &space, const SubnetSpec &spec,
                const Dataset &test);

/// The model a strategy serves: the smallest subnet for fedavg_smallest,
/// the full model otherwise.
SubnetSpec deployed_spec(const SearchSpace &space, Strategy strategy);

/// (memory, bandwidth) utilization, each clamped to [0, 1]; missing when
/// the corresponding budget is 0.
std::pair<std::optional<double>, std::optional<double>> utilization(
    const SearchSpace &space, const SubnetSpec &spec, const Budget &budget, std::size_t batch,
    const CostParams &cost);

/// Largest uniform-ratio spec that fits, or nullopt.
std::optional<SubnetSpec> uniform_prune_choice(const SearchSpace &space, const Budget &budget,
                                               std::size_t batch, const CostParams &cost);

struct RunOptions {
  std::optional<ParamStore> initial;  // overrides initial_store()
  /// Called after each round with its metrics and the updated store.
  std::function<void(const RoundMetrics &, const ParamStore &)> on_round;
  /// Worker threads for client training; 0 reads HETFED_THREADS.
  std::size_t threads = 0;
};

/// Runs the full federated loop for `config.rounds` rounds.
RunResult run(const ExperimentConfig &config, const RunOptions &options = {});

struct SweepRow {
  double epsilon = 0.0;
  std::size_t t_max = 0;
  double mean_mem_util = 0.0;
  double mean_bw_util = 0.0;
  double hit_rate = 0.0;
  std::size_t searches = 0;
};

/// Search-only simulation: selection, budgets and constrained search for
/// every round, no training. Streams match `run` for the same config.
SweepRow simulate_search(const ExperimentConfig &config, double epsilon, std::size_t t_max);

}  // namespace hetfed

#endif  // HETFED_ORCHESTRATOR_HPP_
