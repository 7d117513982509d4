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

#include "hetfed/hetero_agg.hpp"

#include <string>

#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

std::vector<nn::DenseLayer> zeros_like(const SearchSpace &space) {
  return ParamStore(space).layers();
}

void check_update(const ClientUpdate &u, const std::vector<nn::DenseLayer> &global) {
  if (u.params.size() != u.slice_map.size()) {
    throw ContractError("update from client " + std::to_string(u.client_id) +
                        ": parameter/slice count mismatch");
  }
  for (std::size_t k = 0; k < u.slice_map.size(); ++k) {
    const auto &s = u.slice_map[k];
    const auto &p = u.params[k];
    if (s.global_layer >= global.size() || p.in_width() != s.rows || p.out_width() != s.cols ||
        p.bias.size() != s.cols || s.rows > global[s.global_layer].in_width() ||
        s.cols > global[s.global_layer].out_width()) {
      throw ContractError("update from client " + std::to_string(u.client_id) +
                          ": slice " + std::to_string(k) + " does not fit the global layer");
    }
    if (k > 0 && s.rows != u.slice_map[k - 1].cols) {
      throw ContractError("update from client " + std::to_string(u.client_id) +
                          ": slice map does not chain");
    }
  }
}

double effective_weight(const ClientUpdate &u, AggregationWeighting weighting) {
  if (weighting == AggregationWeighting::kUniform) return 1.0;
  if (!(u.weight > 0.0)) {
    throw ContractError("update from client " + std::to_string(u.client_id) +
                        " has non-positive weight");
  }
  return u.weight;
}

}  // namespace

ClientUpdate make_update(const SearchSpace &space, std::size_t client_id, const SubnetSpec &spec,
                         const nn::MlpModel &trained, double weight) {
  ClientUpdate u{client_id, spec, slice_map(space, spec), trained.layers(), weight};
  if (u.params.size() != u.slice_map.size()) {
    throw ShapeError("trained model depth does not match spec " + to_string(spec));
  }
  return u;
}

CoverageMap scatter_count(std::span<const ClientUpdate> updates, const SearchSpace &space,
                          AggregationWeighting weighting) {
  CoverageMap cov{zeros_like(space)};
  for (const auto &u : updates) {
    check_update(u, cov.layers);
    const double w = effective_weight(u, weighting);
    for (const auto &s : u.slice_map) {
      auto &c = cov.layers[s.global_layer];
      c.weights.topLeftCorner(s.rows, s.cols).array() += w;
      c.bias.head(s.cols).array() += w;
    }
  }
  return cov;
}

void aggregate(ParamStore &store, std::span<const ClientUpdate> updates, const SearchSpace &space,
               AggregationWeighting weighting) {
  if (updates.empty()) throw ContractError("aggregate needs at least one update");
  const CoverageMap cov = scatter_count(updates, space, weighting);

  // Normalize per position before summing so a lone contributor is copied exactly.
  std::vector<nn::DenseLayer> acc = zeros_like(space);
  for (const auto &u : updates) {
    const double w = effective_weight(u, weighting);
    for (std::size_t k = 0; k < u.slice_map.size(); ++k) {
      const auto &s = u.slice_map[k];
      const auto &c = cov.layers[s.global_layer];
      auto &a = acc[s.global_layer];
      a.weights.topLeftCorner(s.rows, s.cols).array() +=
          (w / c.weights.topLeftCorner(s.rows, s.cols).array()) * u.params[k].weights.array();
      a.bias.head(s.cols).array() += (w / c.bias.head(s.cols).array()) * u.params[k].bias.array();
    }
  }

  for (std::size_t l = 0; l < store.layer_count(); ++l) {
    auto &g = store.mutable_layer(l);
    const auto &c = cov.layers[l];
    g.weights = (c.weights.array() > 0.0).select(acc[l].weights, g.weights);
    g.bias = (c.bias.array() > 0.0).select(acc[l].bias, g.bias);
  }
}

std::vector<ClientUpdate> failure_filter(std::vector<ClientUpdate> updates,
                                         const std::set<std::size_t> &failed_clients) {
  std::erase_if(updates, [&](const ClientUpdate &u) { return failed_clients.contains(u.client_id); });
  double total = 0.0;
  for (const auto &u : updates) total += u.weight;
  if (total > 0.0) {
    for (auto &u : updates) u.weight /= total;
  }
  return updates;
}

}  // namespace hetfed
