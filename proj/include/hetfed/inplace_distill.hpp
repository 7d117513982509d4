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

#ifndef HETFED_INPLACE_DISTILL_HPP_
#define HETFED_INPLACE_DISTILL_HPP_

#include <cstddef>
#include <vector>

#include "hetfed/nn.hpp"
#include "hetfed/param_store.hpp"
#include "hetfed/rng.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {

enum class DistillMode {
  /// Train independent student copies, then fold them into the store with
  /// element-wise aggregation at equal weights.
  kAggregateWeights,
  /// Students share weights with the store; each iteration the store takes one
  /// Adam step on the student KD gradients averaged over the n subnets.
  kSharedGradient,
};

struct DistillConfig {
  std::size_t subnets = 1;  // n
  std::size_t iterations = 100;  // T_SKD
  std::size_t batch = 64;  // generated samples per iteration
  double learning_rate = 0.001;  // Adam
  DistillMode mode = DistillMode::kAggregateWeights;

  void validate() const;
  bool operator==(const DistillConfig &) const = default;
};

struct DistillReport {
  std::size_t iterations = 0;
  double initial_loss = 0.0;  // mean KD loss over subnets before the first step
  double final_loss = 0.0;  // mean KD loss over subnets after the last step
  std::vector<double> loss_curve;  // per-iteration mean loss, measured before the step
};

/// n independent uniform draws from the whole space (duplicates allowed).
std::vector<SubnetSpec> sample_distill_subnets(const SearchSpace &space, std::size_t n,
                                               RandomEngine &rng);

/// rows x in_dim matrix of i.i.d. N(0, 1) entries.
nn::Matrix gaussian_batch(std::size_t rows, nn::Index in_dim, RandomEngine &rng);

/// Server-side data-free distillation of freshly sampled subnets against the
/// global model. The teacher is the full model as it stood on entry and does
/// not change during the call. Takes no dataset: inputs are Gaussian noise.
DistillReport distill_round(ParamStore &store, const SearchSpace &space, const DistillConfig &config,
                            RandomEngine &rng);

/// Same, with caller-chosen student architectures.
DistillReport distill_subnets(ParamStore &store, const SearchSpace &space,
                              const DistillConfig &config, const std::vector<SubnetSpec> &students,
                              RandomEngine &rng);

}  // namespace hetfed

#endif  // HETFED_INPLACE_DISTILL_HPP_
