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

#include "hetfed/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

constexpr std::pair<Strategy, std::string_view> kStrategyNames[] = {
    {Strategy::kFlexibleSearch, "flexible_search"},
    {Strategy::kUniformPrune, "uniform_prune"},
    {Strategy::kFedAvgLargest, "fedavg_largest"},
    {Strategy::kFedAvgSmallest, "fedavg_smallest"},
    {Strategy::kExcludeInfeasible, "exclude_infeasible"},
};

bool budget_agnostic(Strategy s) {
  return s == Strategy::kFedAvgLargest || s == Strategy::kFedAvgSmallest;
}

std::size_t thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char *env = std::getenv("HETFED_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

void require_finite(const ParamStore &store, std::size_t round, const char *stage) {
  if (store.all_finite()) return;
  std::ostringstream os;
  os << "non-finite global parameters after " << stage << " in round " << round;
  for (std::size_t l = 0; l < store.layer_count(); ++l) {
    const auto &layer = store.layer(l);
    const auto bad = (layer.weights.array().isFinite() == false).count() +
                     (layer.bias.array().isFinite() == false).count();
    if (bad > 0) os << "; layer " << l << ": " << bad << " bad values";
  }
  throw RuntimeAbort(os.str());
}

template <typename T>
std::optional<double> mean_of(const std::vector<T> &records, auto get) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &r : records) {
    if (const std::optional<double> v = get(r)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto &[value, name] : kStrategyNames)
    if (value == s) return name;
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto &[value, n] : kStrategyNames)
    if (n == name) return value;
  throw ContractError("unknown strategy '" + std::string(name) + "'");
}

SearchSpace ExperimentConfig::space() const {
  SearchSpace s;
  s.in_dim = data.in_dim;
  s.hidden_width = model.hidden_width;
  s.hidden_depth = model.hidden_depth;
  s.classes = data.classes;
  s.ratios = model.ratios;
  return s;
}

void ExperimentConfig::validate() const {
  space().validate();
  if (clients < 1) throw ContractError("clients must be >= 1");
  if (clients_per_round < 1 || clients_per_round > clients) {
    throw ContractError("clients_per_round must lie in [1, clients]");
  }
  if (local_epochs < 1) throw ContractError("local_epochs must be >= 1");
  if (rounds < 1) throw ContractError("rounds must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
  if (!(train.optimizer.learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  if (!(train.gamma > 0.0)) throw ContractError("lr decay gamma must be positive");
  if (distill.config.batch < 1) throw ContractError("distill batch must be >= 1");
  if (!(distill.config.learning_rate > 0.0)) throw ContractError("distill lr must be positive");
  limits.validate();
  cost.validate();
  if (!(train_kappa >= 0.0)) throw ContractError("train_kappa must be >= 0");
  if (!(server_overhead_s > 0.0)) throw ContractError("server_overhead_s must be > 0");
  if (data.csv_path.empty() && (data.classes < 1 || data.in_dim < 1 || data.per_class < 1)) {
    throw ContractError("data dims must be positive");
  }
  if (data.partition == PartitionScheme::kDirichlet && !(data.alpha > 0.0)) {
    throw ContractError("Dirichlet alpha must be positive");
  }
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ContractError("test_fraction must lie in (0, 1)");
  }
}

std::vector<std::size_t> ExperimentConfig::effective_milestones() const {
  if (!train.milestones.empty()) return train.milestones;
  const auto at = [&](double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(rounds)));
  };
  return {at(0.6), at(0.85)};
}

double ExperimentConfig::learning_rate_at(std::size_t round) const {
  double lr = train.optimizer.learning_rate;
  for (std::size_t m : effective_milestones())
    if (round >= m) lr *= train.gamma;
  return lr;
}

std::size_t ExperimentConfig::distill_subnets() const {
  return distill.config.subnets == 0 ? clients_per_round : distill.config.subnets;
}

bool ExperimentConfig::distills() const {
  if (distill.config.iterations == 0) return false;
  if (strategy == Strategy::kFlexibleSearch) return distill.enabled;
  if (strategy == Strategy::kUniformPrune) return distill.for_uniform_prune;
  return false;
}

bool ExperimentConfig::operator==(const ExperimentConfig &o) const {
  return seed == o.seed && clients == o.clients && clients_per_round == o.clients_per_round &&
         local_epochs == o.local_epochs && rounds == o.rounds && batch_size == o.batch_size &&
         strategy == o.strategy && epsilon == o.epsilon && t_max == o.t_max && model == o.model &&
         train == o.train && distill == o.distill && limits == o.limits && cost == o.cost &&
         train_kappa == o.train_kappa && server_overhead_s == o.server_overhead_s &&
         data == o.data && weighting == o.weighting && output_dir == o.output_dir;
}

ExperimentData prepare_data(const ExperimentConfig &config) {
  Dataset all;
  if (!config.data.csv_path.empty()) {
    std::filesystem::path p(config.data.csv_path);
    all = load_csv_dataset(p.is_absolute() ? p : config.base_dir / p);
    if (all.dims() != config.data.in_dim || all.classes > config.data.classes) {
      throw ContractError("imported dataset does not match data.in_dim / data.classes");
    }
    all.classes = config.data.classes;
  } else {
    all = gen_synthetic(config.data.classes, config.data.in_dim, config.data.per_class,
                        derive_seed(config.seed, "data"));
  }
  RandomEngine split_rng = make_stream(config.seed, "holdout");
  HoldoutSplit split = split_holdout(all, config.data.test_fraction, split_rng);

  PartitionPlan plan{config.data.partition, config.clients, config.data.alpha,
                     derive_seed(config.seed, "partition")};
  const auto parts = partition_indices(split.train, plan);

  ExperimentData out;
  StreamHash digest;
  double total = 0.0;
  for (const auto &rows : parts) {
    digest.mix(static_cast<std::uint64_t>(rows.size()));
    for (auto r : rows) digest.mix(static_cast<std::uint64_t>(r));
    out.clients.push_back(standardize(subset(split.train, rows)));
    total += static_cast<double>(rows.size());
  }
  for (const auto &rows : parts) out.weights.push_back(static_cast<double>(rows.size()) / total);
  out.test = split.test;
  out.test.features = Standardizer::fit(split.train.features).apply(split.test.features);
  out.partition_digest = digest.value();
  return out;
}

ParamStore initial_store(const ExperimentConfig &config) {
  RandomEngine rng = make_stream(config.seed, "init");
  return ParamStore::random(config.space(), rng);
}

std::vector<std::size_t> select_clients(const ExperimentConfig &config, std::size_t round) {
  RandomEngine rng = make_stream(config.seed, "selection", {round});
  std::vector<std::size_t> ids(config.clients);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < config.clients_per_round; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(config.clients_per_round);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RandomEngine client_train_stream(const ExperimentConfig &config, std::size_t round,
                                 std::size_t client) {
  return make_stream(config.seed, "train", {round, client});
}

LocalTrainResult local_train(nn::MlpModel model, const Dataset &data, std::size_t epochs,
                             std::size_t batch, const nn::OptimizerConfig &optimizer,
                             RandomEngine &rng) {
  if (data.size() == 0) throw ContractError("local_train on an empty dataset");
  nn::OptimizerState state(optimizer, model);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  LocalTrainResult out;
  double loss_sum = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Dataset mb = subset(data, rows);
      const nn::ForwardCache cache = nn::forward(model, mb.features);
      const nn::LossAndGradients lg = nn::backward_ce(model, cache, mb.labels);
      nn::apply_update(model, lg.gradients, state);
      loss_sum += lg.loss;
      ++out.steps;
    }
  }
  out.mean_loss = out.steps == 0 ? 0.0 : loss_sum / static_cast<double>(out.steps);
  out.model = std::move(model);
  return out;
}

double evaluate(const ParamStore &store, const SearchSpace &space, const Dataset &test) {
  return evaluate(store, space, full_spec(space), test);
}

double evaluate(const ParamStore &store, const SearchSpace &space, const SubnetSpec &spec,
                const Dataset &test) {
  if (test.size() == 0) throw ContractError("evaluate on an empty test set");
  const nn::MlpModel model = materialize(space, spec, store).first;
  const nn::Matrix logits = nn::predict(model, test.features);
  std::size_t correct = 0;
  for (nn::Index r = 0; r < logits.rows(); ++r) {
    nn::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    if (arg == test.labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

SubnetSpec deployed_spec(const SearchSpace &space, Strategy strategy) {
  return strategy == Strategy::kFedAvgSmallest ? smallest_spec(space) : full_spec(space);
}

std::pair<std::optional<double>, std::optional<double>> utilization(
    const SearchSpace &space, const SubnetSpec &spec, const Budget &budget, std::size_t batch,
    const CostParams &cost) {
  std::pair<std::optional<double>, std::optional<double>> out;
  if (budget.memory_bytes > 0.0) {
    out.first = std::clamp(memory_cost(space, spec, batch, cost) / budget.memory_bytes, 0.0, 1.0);
  }
  if (budget.bandwidth_bits_per_s > 0.0) {
    out.second = std::clamp(comm_time(space, spec, cost, budget) / cost.comm_deadline_s, 0.0, 1.0);
  }
  return out;
}

std::optional<SubnetSpec> uniform_prune_choice(const SearchSpace &space, const Budget &budget,
                                               std::size_t batch, const CostParams &cost) {
  for (auto it = space.ratios.rbegin(); it != space.ratios.rend(); ++it) {
    SubnetSpec spec = uniform_spec(space, *it);
    if (feasible(space, spec, batch, cost, budget)) return spec;
  }
  return std::nullopt;
}

namespace {

// Assignment step shared by `run` and `simulate_search`.
ClientRecord assign(const ExperimentConfig &config, const SearchSpace &space, SamplingPool &pool,
                    std::size_t round, std::size_t client, const Budget &budget, double epsilon,
                    std::size_t t_max) {
  ClientRecord rec;
  rec.round = round + 1;
  rec.client = client;
  rec.budget = budget;
  switch (config.strategy) {
    case Strategy::kFlexibleSearch: {
      const SearchOutcome o = search(pool, budget, config.batch_size, config.cost, epsilon, t_max);
      rec.spec = o.chosen;
      rec.random_tries = o.random_tries;
      rec.hit_tmax = o.hit_tmax;
      rec.searched = true;
      rec.feasible = !o.infeasible_fallback;
      break;
    }
    case Strategy::kUniformPrune: {
      const auto choice = uniform_prune_choice(space, budget, config.batch_size, config.cost);
      rec.spec = choice.value_or(smallest_spec(space));
      rec.feasible = choice.has_value();
      break;
    }
    case Strategy::kFedAvgLargest:
      rec.spec = full_spec(space);
      break;
    case Strategy::kFedAvgSmallest:
      rec.spec = smallest_spec(space);
      break;
    case Strategy::kExcludeInfeasible:
      rec.spec = full_spec(space);
      rec.feasible = feasible(space, rec.spec, config.batch_size, config.cost, budget);
      rec.excluded = !rec.feasible;
      break;
  }
  if (budget_agnostic(config.strategy)) {
    rec.feasible = feasible(space, rec.spec, config.batch_size, config.cost, budget);
  }
  rec.param_count = param_count(space, rec.spec);
  std::tie(rec.mem_util, rec.bw_util) =
      utilization(space, rec.spec, budget, config.batch_size, config.cost);
  if (rec.excluded) rec.mem_util = rec.bw_util = std::nullopt;
  return rec;
}

std::size_t local_steps(const ExperimentConfig &config, std::size_t samples) {
  return config.local_epochs * ((samples + config.batch_size - 1) / config.batch_size);
}

// Simulated seconds a client occupies: training plus transfers, transfers
// capped at the deadline (a client that cannot finish is cut off there).
double client_seconds(const ExperimentConfig &config, const SearchSpace &space,
                      const ClientRecord &rec, std::size_t samples) {
  if (rec.excluded) return 0.0;
  const double comm = std::min(comm_time(space, rec.spec, config.cost, rec.budget),
                               config.cost.comm_deadline_s);
  return comm + train_time_estimate(rec.param_count, local_steps(config, samples),
                                    config.train_kappa);
}

}  // namespace

RunResult run(const ExperimentConfig &config, const RunOptions &options) {
  config.validate();
  const SearchSpace space = config.space();
  const ExperimentData data = prepare_data(config);
  const LoadedTraces traces = load_traces(config.limits, config.base_dir);
  const std::size_t threads = thread_count(options.threads);

  ParamStore store = options.initial ? *options.initial : initial_store(config);
  if (!store.same_shape(ParamStore(space))) {
    throw ContractError("initial parameters do not match the configured model");
  }
  SamplingPool pool = init_pool(space, derive_seed(config.seed, "search"));
  SimClock clock;
  StreamHash selection_digest;
  StreamHash budget_digest;

  DistillConfig distill_cfg = config.distill.config;
  distill_cfg.subnets = config.distill_subnets();
  const std::size_t full_params = param_count(space, full_spec(space));
  const SubnetSpec deployed = deployed_spec(space, config.strategy);

  std::vector<RoundMetrics> history;
  history.reserve(config.rounds);
  for (std::size_t r = 0; r < config.rounds; ++r) {
    const double start = clock.now();
    const auto selected = select_clients(config, r);
    for (auto c : selected) selection_digest.mix(static_cast<std::uint64_t>(c));

    std::vector<ClientRecord> records;
    for (auto c : selected) {
      RandomEngine budget_rng = make_stream(config.seed, "budget", {r, c});
      const Budget budget = budget_at(config.limits, traces, c, start, budget_rng);
      budget_digest.mix(budget.memory_bytes);
      budget_digest.mix(budget.bandwidth_bits_per_s);
      records.push_back(assign(config, space, pool, r, c, budget, config.epsilon, config.t_max));
    }

    // Clients that cannot load their model at assignment fail without training.
    std::vector<std::size_t> to_train;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto &rec = records[i];
      if (rec.excluded) continue;
      if (!rec.feasible && !budget_agnostic(config.strategy)) {
        rec.failed = true;
        continue;
      }
      to_train.push_back(i);
    }

    nn::OptimizerConfig opt = config.train.optimizer;
    opt.learning_rate = config.learning_rate_at(r);
    std::vector<std::optional<LocalTrainResult>> trained(records.size());
    const ParamStore &snapshot = store;
    parallel_for(to_train.size(), threads, [&](std::size_t k) {
      const auto &rec = records[to_train[k]];
      RandomEngine rng = client_train_stream(config, r, rec.client);
      trained[to_train[k]] =
          local_train(materialize(space, rec.spec, snapshot).first, data.clients[rec.client],
                      config.local_epochs, config.batch_size, opt, rng);
    });

    std::vector<ClientUpdate> updates;
    std::set<std::size_t> failed;
    double round_seconds = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto &rec = records[i];
      const std::size_t samples = data.clients[rec.client].size();
      const double busy = client_seconds(config, space, rec, samples);
      round_seconds = std::max(round_seconds, busy);
      if (!trained[i]) {
        if (rec.failed) failed.insert(rec.client);
        continue;
      }
      rec.train_loss = trained[i]->mean_loss;
      if (!budget_agnostic(config.strategy)) {
        const Budget done = refresh_budget(config.limits, traces, rec.client, start + busy, rec.budget);
        const ActualCosts actual{memory_cost(space, rec.spec, config.batch_size, config.cost),
                                 round_payload_bits(space, rec.spec, config.cost)};
        rec.failed = check_failure(rec.budget, done, actual, config.cost);
      }
      if (rec.failed) failed.insert(rec.client);
      updates.push_back(
          make_update(space, rec.client, rec.spec, trained[i]->model, data.weights[rec.client]));
    }
    updates = failure_filter(std::move(updates), failed);
    if (!updates.empty()) aggregate(store, updates, space, config.weighting);
    require_finite(store, r + 1, "aggregation");

    RoundMetrics m;
    m.round = r + 1;
    if (config.distills()) {
      RandomEngine distill_rng = make_stream(config.seed, "distill", {r});
      m.distill = distill_round(store, space, distill_cfg, distill_rng);
      require_finite(store, r + 1, "distillation");
    }
    m.accuracy = evaluate(store, space, deployed, data.test);

    double server_seconds = config.server_overhead_s;
    if (m.distill) {
      server_seconds += train_time_estimate(full_params, distill_cfg.iterations * distill_cfg.subnets,
                                            config.train_kappa);
    }
    clock.advance(round_seconds + server_seconds);
    m.sim_time_s = clock.now();

    m.aggregated = updates.size();
    for (const auto &rec : records) {
      m.failures += rec.failed ? 1 : 0;
      m.excluded += rec.excluded ? 1 : 0;
    }
    std::vector<double> losses;
    for (const auto &u : updates) {
      for (const auto &rec : records)
        if (rec.client == u.client_id) losses.push_back(rec.train_loss);
    }
    m.train_loss = mean_of(losses, [](double v) { return std::optional<double>(v); });
    m.mean_mem_util = mean_of(records, [](const ClientRecord &c) { return c.mem_util; });
    m.mean_bw_util = mean_of(records, [](const ClientRecord &c) { return c.bw_util; });
    m.hit_rate = mean_of(records, [](const ClientRecord &c) {
      return c.searched ? std::optional<double>(c.hit_tmax ? 1.0 : 0.0) : std::nullopt;
    });
    m.clients = std::move(records);
    if (options.on_round) options.on_round(m, store);
    history.push_back(std::move(m));
  }

  RunSummary summary;
  summary.final_accuracy = history.back().accuracy;
  std::vector<const ClientRecord *> all;
  for (const auto &m : history)
    for (const auto &c : m.clients) all.push_back(&c);
  summary.mean_mem_util =
      mean_of(all, [](const ClientRecord *c) { return c->mem_util; }).value_or(0.0);
  summary.mean_bw_util = mean_of(all, [](const ClientRecord *c) { return c->bw_util; }).value_or(0.0);
  summary.hit_rate = mean_of(all, [](const ClientRecord *c) {
    return c->searched ? std::optional<double>(c->hit_tmax ? 1.0 : 0.0) : std::nullopt;
  });
  for (const auto &m : history) {
    summary.failures += m.failures;
    summary.excluded += m.excluded;
  }
  summary.sim_time_s = clock.now();
  summary.digests = {selection_digest.value(), budget_digest.value(), data.partition_digest};
  return RunResult{std::move(history), std::move(store), summary};
}

SweepRow simulate_search(const ExperimentConfig &config, double epsilon, std::size_t t_max) {
  ExperimentConfig cfg = config;
  cfg.strategy = Strategy::kFlexibleSearch;
  cfg.epsilon = epsilon;
  cfg.t_max = t_max;
  cfg.validate();
  const SearchSpace space = cfg.space();
  const LoadedTraces traces = load_traces(cfg.limits, cfg.base_dir);
  // Client sizes only feed the simulated training time.
  std::vector<std::size_t> sizes;
  for (const auto &c : prepare_data(cfg).clients) sizes.push_back(c.size());

  SamplingPool pool = init_pool(space, derive_seed(cfg.seed, "search"));
  SimClock clock;
  std::vector<ClientRecord> all;
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const double start = clock.now();
    double round_seconds = 0.0;
    for (auto c : select_clients(cfg, r)) {
      RandomEngine budget_rng = make_stream(cfg.seed, "budget", {r, c});
      const Budget budget = budget_at(cfg.limits, traces, c, start, budget_rng);
      all.push_back(assign(cfg, space, pool, r, c, budget, epsilon, t_max));
      round_seconds = std::max(round_seconds, client_seconds(cfg, space, all.back(), sizes[c]));
    }
    clock.advance(round_seconds + cfg.server_overhead_s);
  }

  SweepRow row;
  row.epsilon = epsilon;
  row.t_max = t_max;
  row.searches = all.size();
  row.mean_mem_util = mean_of(all, [](const ClientRecord &c) { return c.mem_util; }).value_or(0.0);
  row.mean_bw_util = mean_of(all, [](const ClientRecord &c) { return c.bw_util; }).value_or(0.0);
  std::size_t hits = 0;
  for (const auto &c : all) hits += c.hit_tmax ? 1 : 0;
  row.hit_rate = all.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(all.size());
  return row;
}

}  // namespace hetfed
