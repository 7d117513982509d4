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

#ifndef HETFED_HETERO_AGG_HPP_
#define HETFED_HETERO_AGG_HPP_

#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "hetfed/nn.hpp"
#include "hetfed/param_store.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {

/// A trained subnet returned by one client.
struct ClientUpdate {
  std::size_t client_id = 0;
  SubnetSpec spec;
  LayerSliceMap slice_map;
  std::vector<nn::DenseLayer> params;  // one per slice, shaped rows x cols
  double weight = 1.0;  // data share p_i
};

/// Builds an update from a trained model, taking the slice map from `spec`.
ClientUpdate make_update(const SearchSpace &space, std::size_t client_id, const SubnetSpec &spec,
                         const nn::MlpModel &trained, double weight);

enum class AggregationWeighting {
  kDataShare,  // weight each covering client by p_i
  kUniform,  // plain mean over covering clients
};

/// Store-shaped map holding, per parameter, the total weight of the updates
/// that cover it.
struct CoverageMap {
  std::vector<nn::DenseLayer> layers;
};

CoverageMap scatter_count(std::span<const ClientUpdate> updates, const SearchSpace &space,
                          AggregationWeighting weighting = AggregationWeighting::kDataShare);

/// Element-wise aggregation: each covered position becomes the weighted mean
/// of the covering updates' values; uncovered positions keep their value.
void aggregate(ParamStore &store, std::span<const ClientUpdate> updates, const SearchSpace &space,
               AggregationWeighting weighting = AggregationWeighting::kDataShare);

/// Drops updates from failed clients and rescales the remaining weights to
/// sum to 1. An empty result means the round has nothing to aggregate.
std::vector<ClientUpdate> failure_filter(std::vector<ClientUpdate> updates,
                                         const std::set<std::size_t> &failed_clients);

}  // namespace hetfed

#endif  // HETFED_HETERO_AGG_HPP_
