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

#include "hetfed/cost_model.hpp"

#include <limits>

#include "hetfed/errors.hpp"

namespace hetfed {

void CostParams::validate() const {
  if (!(bytes_per_param > 0.0) || !(train_overhead_factor > 0.0) ||
      !(bytes_per_activation > 0.0) || !(comm_deadline_s > 0.0)) {
    throw ContractError("cost coefficients must be positive");
  }
  if (!(protocol_overhead_factor >= 1.0)) {
    throw ContractError("protocol overhead factor must be >= 1");
  }
}

double memory_cost(const SearchSpace &space, const SubnetSpec &spec, std::size_t batch,
                   const CostParams &cost) {
  if (batch < 1) throw ContractError("memory_cost: batch must be >= 1");
  const auto params = static_cast<double>(param_count(space, spec));
  double activations = static_cast<double>(space.in_dim + space.classes);
  for (double v : spec.ratios) activations += static_cast<double>(space.width_for(v));
  return cost.train_overhead_factor * cost.bytes_per_param * params +
         cost.bytes_per_activation * static_cast<double>(batch) * activations;
}

double round_payload_bits(const SearchSpace &space, const SubnetSpec &spec, const CostParams &cost) {
  return 2.0 * cost.protocol_overhead_factor * kWireBitsPerParam *
         static_cast<double>(param_count(space, spec));
}

double comm_time(const SearchSpace &space, const SubnetSpec &spec, const CostParams &cost,
                 const Budget &budget) {
  if (!(budget.bandwidth_bits_per_s > 0.0)) return std::numeric_limits<double>::infinity();
  return round_payload_bits(space, spec, cost) / budget.bandwidth_bits_per_s;
}

bool feasible(const SearchSpace &space, const SubnetSpec &spec, std::size_t batch,
              const CostParams &cost, const Budget &budget) {
  return memory_cost(space, spec, batch, cost) <= budget.memory_bytes &&
         comm_time(space, spec, cost, budget) <= cost.comm_deadline_s;
}

}  // namespace hetfed
