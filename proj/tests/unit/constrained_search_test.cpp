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

#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hetfed/constrained_search.hpp"
#include "hetfed/cost_model.hpp"
#include "hetfed/errors.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {
namespace {

SearchSpace small_space() {
  return {.in_dim = 8, .hidden_width = 16, .hidden_depth = 4, .classes = 3, .ratios = {0.0, 0.5, 1.0}};
}

// Largest feasible spec by brute force; ties keep the lexicographically smaller spec.
std::optional<SubnetSpec> brute_force_best(const SearchSpace &space, const Budget &budget,
                                           std::size_t batch, const CostParams &cost) {
  std::optional<SubnetSpec> best;
  std::size_t best_params = 0;
  for (const auto &spec : enumerate_specs(space)) {
    if (!feasible(space, spec, batch, cost, budget)) continue;
    const auto p = param_count(space, spec);
    if (!best || p > best_params) {
      best = spec;
      best_params = p;
    }
  }
  return best;
}

Budget random_budget(const SearchSpace &space, std::size_t batch, const CostParams &cost,
                     RandomEngine &rng) {
  const double mem_lo = 0.8 * memory_cost(space, smallest_spec(space), batch, cost);
  const double mem_hi = 1.1 * memory_cost(space, full_spec(space), batch, cost);
  const double bw_lo = 0.8 * round_payload_bits(space, smallest_spec(space), cost) / cost.comm_deadline_s;
  const double bw_hi = 1.1 * round_payload_bits(space, full_spec(space), cost) / cost.comm_deadline_s;
  std::uniform_real_distribution<double> mem(mem_lo, mem_hi), bw(bw_lo, bw_hi);
  const double m = mem(rng);
  return {m, bw(rng)};
}

TEST(SamplingPool, StartsWithSmallestAndFull) {
  const auto pool = init_pool(small_space(), 1);
  EXPECT_EQ(pool.size(), 2u);
  const auto specs = pool.specs();
  EXPECT_EQ(specs.front(), full_spec(small_space()));
  EXPECT_EQ(specs.back(), smallest_spec(small_space()));
}

TEST(SamplingPool, SingletonSetDeduplicates) {
  SearchSpace space = small_space();
  space.ratios = {1.0};
  EXPECT_EQ(init_pool(space, 1).size(), 1u);
}

TEST(SamplingPool, OrderFollowsParamCount) {
  const auto space = small_space();
  auto pool = init_pool(space, 1);
  for (const auto &spec : enumerate_specs(space)) pool.insert(spec);
  EXPECT_EQ(pool.size(), space.spec_count());
  EXPECT_FALSE(pool.insert(full_spec(space)));
  const auto specs = pool.specs();
  for (std::size_t i = 1; i < specs.size(); ++i) {
    const auto a = param_count(space, specs[i - 1]);
    const auto b = param_count(space, specs[i]);
    EXPECT_GE(a, b);
    if (a == b) EXPECT_LT(specs[i - 1], specs[i]);
  }
}

TEST(PoolBestFeasible, UnlimitedBudgetGivesFull) {
  const auto space = small_space();
  const auto pool = init_pool(space, 1);
  EXPECT_EQ(pool_best_feasible(pool, {1e15, 1e15}, 16, CostParams{}), full_spec(space));
}

TEST(PoolBestFeasible, ExactSmallestBudgetGivesSmallest) {
  const auto space = small_space();
  const CostParams cost;
  auto pool = init_pool(space, 1);
  for (const auto &spec : enumerate_specs(space)) pool.insert(spec);
  const auto small = smallest_spec(space);
  const Budget exact{memory_cost(space, small, 16, cost), round_payload_bits(space, small, cost)};
  EXPECT_EQ(pool_best_feasible(pool, exact, 16, cost), small);
  const Budget below{exact.memory_bytes * 0.999, exact.bandwidth_bits_per_s};
  EXPECT_EQ(pool_best_feasible(pool, below, 16, cost), std::nullopt);
}

TEST(Search, EpsilonOneIsPurePoolLookup) {
  const auto space = small_space();
  auto pool = init_pool(space, 3);
  RandomEngine rng(3);
  std::vector<SearchOutcome> outcomes;
  for (int i = 0; i < 100; ++i) {
    const auto budget = random_budget(space, 16, CostParams{}, rng);
    const auto out = search(pool, budget, 16, CostParams{}, 1.0, 5);
    EXPECT_EQ(out.random_tries, 0u);
    EXPECT_FALSE(out.hit_tmax);
    outcomes.push_back(out);
  }
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_EQ(hit_rate(outcomes), 0.0);
}

TEST(Search, EpsilonZeroAlwaysUsesAllDraws) {
  const auto space = small_space();
  auto pool = init_pool(space, 4);
  std::vector<SearchOutcome> outcomes;
  for (int i = 0; i < 50; ++i) {
    const auto out = search(pool, {1e15, 1e15}, 16, CostParams{}, 0.0, 5);
    EXPECT_EQ(out.random_tries, 5u);
    EXPECT_TRUE(out.hit_tmax);
    outcomes.push_back(out);
  }
  EXPECT_EQ(hit_rate(outcomes), 1.0);
}

TEST(Search, ZeroTmaxNeverHitsWhenEpsilonPositive) {
  auto pool = init_pool(small_space(), 4);
  const auto out = search(pool, {1e15, 1e15}, 16, CostParams{}, 0.5, 0);
  EXPECT_EQ(out.random_tries, 0u);
}

TEST(Search, AdoptedSpecsAreFeasibleOrFlagged) {
  const auto space = small_space();
  const CostParams cost;
  auto pool = init_pool(space, 5);
  RandomEngine rng(5);
  std::size_t last_size = pool.size();
  for (int i = 0; i < 2000; ++i) {
    const auto budget = random_budget(space, 16, cost, rng);
    const auto out = search(pool, budget, 16, cost, 0.5, 4);
    EXPECT_LE(out.random_tries, 4u);
    EXPECT_EQ(out.hit_tmax, out.random_tries == 4u);
    EXPECT_TRUE(pool.contains(out.chosen));
    EXPECT_GE(pool.size(), last_size);
    EXPECT_EQ(out.pool_size_after, pool.size());
    last_size = pool.size();
    if (out.infeasible_fallback) {
      EXPECT_EQ(out.chosen, smallest_spec(space));
      EXPECT_FALSE(feasible(space, smallest_spec(space), 16, cost, budget));
    } else {
      EXPECT_TRUE(feasible(space, out.chosen, 16, cost, budget));
    }
  }
}

TEST(Search, ExhaustedPoolGivesBruteForceArgmax) {
  for (std::size_t d = 1; d <= 4; ++d) {
    SearchSpace space = small_space();
    space.hidden_depth = d;
    const CostParams cost;
    auto pool = init_pool(space, 6);
    for (const auto &spec : enumerate_specs(space)) pool.insert(spec);
    RandomEngine rng(6 + d);
    for (int i = 0; i < 300; ++i) {
      const auto budget = random_budget(space, 16, cost, rng);
      const auto expected = brute_force_best(space, budget, 16, cost);
      const auto out = search(pool, budget, 16, cost, 0.0, 3);
      if (!expected) {
        EXPECT_TRUE(out.infeasible_fallback);
        continue;
      }
      EXPECT_EQ(param_count(space, out.chosen), param_count(space, *expected));
    }
  }
}

TEST(Search, LongSearchesReachFullUnderUnlimitedBudget) {
  const auto space = small_space();
  auto pool = init_pool(space, 7);
  // full is in the pool from the start, so it is always the incumbent
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(search(pool, {1e15, 1e15}, 16, CostParams{}, 0.0, 10).chosen, full_spec(space));
  }
}

TEST(Search, DrawsAreBetterOnlyWhenStrictlyLarger) {
  // a budget that fits exactly the incumbent: no draw can replace it
  const auto space = small_space();
  const CostParams cost;
  auto pool = init_pool(space, 8);
  const auto small = smallest_spec(space);
  const Budget exact{memory_cost(space, small, 16, cost), round_payload_bits(space, small, cost)};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(search(pool, exact, 16, cost, 0.0, 5).chosen, small);
}

TEST(Search, HitRateFollowsGeometricLaw) {
  const auto space = small_space();
  auto pool = init_pool(space, 9);
  std::vector<SearchOutcome> outcomes;
  const int calls = 100000;
  outcomes.reserve(calls);
  std::vector<std::size_t> tries_hist(6, 0);
  for (int i = 0; i < calls; ++i) {
    outcomes.push_back(search(pool, {1e15, 1e15}, 16, CostParams{}, 0.8, 5));
    ++tries_hist[outcomes.back().random_tries];
  }
  const double expected = std::pow(0.2, 5);
  const double sd = std::sqrt(expected * (1 - expected) / calls);
  EXPECT_NEAR(hit_rate(outcomes), expected, 4 * sd);
  // P(k draws) = 0.8 * 0.2^k for k < 5
  EXPECT_NEAR(static_cast<double>(tries_hist[0]) / calls, 0.8, 0.01);
  EXPECT_NEAR(static_cast<double>(tries_hist[1]) / calls, 0.16, 0.01);
}

TEST(Search, EveryLayerIsSelectedSomewhere) {
  const auto space = small_space();
  const CostParams cost;
  auto pool = init_pool(space, 10);
  RandomEngine rng(10);
  std::set<std::size_t> used;
  for (int i = 0; i < 500; ++i) {
    const auto out = search(pool, random_budget(space, 16, cost, rng), 16, cost, 0.8, 5);
    for (std::size_t l = 0; l < out.chosen.ratios.size(); ++l) {
      if (out.chosen.ratios[l] > 0.0) used.insert(l);
    }
  }
  EXPECT_EQ(used.size(), space.hidden_depth);
}

TEST(Search, RejectsBadEpsilon) {
  auto pool = init_pool(small_space(), 1);
  EXPECT_THROW(search(pool, {1, 1}, 16, CostParams{}, 1.5, 5), ContractError);
}

TEST(HitRate, EmptyListIsRejected) {
  EXPECT_THROW(hit_rate({}), ContractError);
}

}  // namespace
}  // namespace hetfed
