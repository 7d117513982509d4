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

#ifndef HETFED_CONSTRAINED_SEARCH_HPP_
#define HETFED_CONSTRAINED_SEARCH_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "hetfed/cost_model.hpp"
#include "hetfed/rng.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {

/// Result of one per-client search call.
struct SearchOutcome {
  SubnetSpec chosen;
  std::size_t random_tries = 0;
  bool hit_tmax = false;  // random_tries == t_max
  std::size_t pool_size_after = 0;
  /// Nothing in the pool or among the draws was feasible; `chosen` is the
  /// smallest spec and does not fit the budget.
  bool infeasible_fallback = false;
};

/// Growing set of candidate specs, ordered by parameter count (largest first,
/// ties by ascending ratio vector). Starts with the smallest and full specs.
///
/// The pool is shared by all clients of a run. It is not thread-safe; callers
/// serialize searches.
class SamplingPool {
 public:
  SamplingPool(SearchSpace space, std::uint64_t seed);

  const SearchSpace &space() const { return space_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const SubnetSpec &spec) const;
  /// Returns true when the spec was not already present.
  bool insert(const SubnetSpec &spec);
  /// Members in pool order.
  std::vector<SubnetSpec> specs() const;

  RandomEngine &rng() { return rng_; }

 private:
  struct Entry {
    std::size_t params;
    SubnetSpec spec;
  };
  struct Order {
    bool operator()(const Entry &a, const Entry &b) const {
      if (a.params != b.params) return a.params > b.params;
      return a.spec < b.spec;
    }
  };

  friend std::optional<SubnetSpec> pool_best_feasible(const SamplingPool &, const Budget &,
                                                      std::size_t, const CostParams &);

  SearchSpace space_;
  std::set<Entry, Order> entries_;
  RandomEngine rng_;
};

SamplingPool init_pool(const SearchSpace &space, std::uint64_t seed);

/// First pool member, in descending parameter order, that fits the budget.
std::optional<SubnetSpec> pool_best_feasible(const SamplingPool &pool, const Budget &budget,
                                             std::size_t batch, const CostParams &cost);

/// Epsilon-greedy largest-feasible search with early stop.
///
/// The incumbent starts as the pool's best feasible spec. Before each random
/// draw a Bernoulli(epsilon) trial decides whether to stop and adopt the
/// incumbent; otherwise a uniform random spec is drawn, added to the pool,
/// and replaces the incumbent if it is feasible and strictly larger. At most
/// `t_max` draws are made.
SearchOutcome search(SamplingPool &pool, const Budget &budget, std::size_t batch,
                     const CostParams &cost, double epsilon, std::size_t t_max);

/// Fraction of outcomes that used all t_max draws. Throws on an empty list.
double hit_rate(std::span<const SearchOutcome> outcomes);

}  // namespace hetfed

#endif  // HETFED_CONSTRAINED_SEARCH_HPP_
