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

#include "hetfed/constrained_search.hpp"

#include "hetfed/errors.hpp"

namespace hetfed {

SamplingPool::SamplingPool(SearchSpace space, std::uint64_t seed)
    : space_(std::move(space)), rng_(seed) {
  space_.validate();
  insert(smallest_spec(space_));
  insert(full_spec(space_));
}

bool SamplingPool::contains(const SubnetSpec &spec) const {
  return entries_.contains(Entry{param_count(space_, spec), spec});
}

bool SamplingPool::insert(const SubnetSpec &spec) {
  return entries_.insert(Entry{param_count(space_, spec), spec}).second;
}

std::vector<SubnetSpec> SamplingPool::specs() const {
  std::vector<SubnetSpec> out;
  out.reserve(entries_.size());
  for (const auto &e : entries_) out.push_back(e.spec);
  return out;
}

SamplingPool init_pool(const SearchSpace &space, std::uint64_t seed) {
  return SamplingPool(space, seed);
}

std::optional<SubnetSpec> pool_best_feasible(const SamplingPool &pool, const Budget &budget,
                                             std::size_t batch, const CostParams &cost) {
  for (const auto &e : pool.entries_) {
    if (feasible(pool.space_, e.spec, batch, cost, budget)) return e.spec;
  }
  return std::nullopt;
}

SearchOutcome search(SamplingPool &pool, const Budget &budget, std::size_t batch,
                     const CostParams &cost, double epsilon, std::size_t t_max) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
  const SearchSpace &space = pool.space();

  SearchOutcome out;
  if (auto best = pool_best_feasible(pool, budget, batch, cost)) {
    out.chosen = std::move(*best);
  } else {
    out.chosen = smallest_spec(space);
    out.infeasible_fallback = true;
  }
  std::size_t incumbent_params = param_count(space, out.chosen);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  while (out.random_tries < t_max) {
    if (coin(pool.rng()) < epsilon) break;
    SubnetSpec draw = random_spec(space, pool.rng());
    ++out.random_tries;
    pool.insert(draw);
    if (!feasible(space, draw, batch, cost, budget)) continue;
    const std::size_t params = param_count(space, draw);
    if (out.infeasible_fallback || params > incumbent_params) {
      out.chosen = std::move(draw);
      incumbent_params = params;
      out.infeasible_fallback = false;
    }
  }
  out.hit_tmax = out.random_tries == t_max;
  out.pool_size_after = pool.size();
  return out;
}

double hit_rate(std::span<const SearchOutcome> outcomes) {
  if (outcomes.empty()) throw ContractError("hit_rate of an empty outcome list");
  std::size_t hits = 0;
  for (const auto &o : outcomes) hits += o.hit_tmax ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

}  // namespace hetfed
