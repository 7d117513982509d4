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

#ifndef HETFED_COST_MODEL_HPP_
#define HETFED_COST_MODEL_HPP_

#include <cstddef>

#include "hetfed/search_space.hpp"

namespace hetfed {

/// Bits per parameter on the wire, independent of the 64-bit arithmetic used
/// for training.
inline constexpr double kWireBitsPerParam = 32.0;

/// Coefficients of the analytic memory/communication model.
struct CostParams {
  double bytes_per_param = 8.0;
  double train_overhead_factor = 3.0;  // weights + grads + optimizer moments
  double bytes_per_activation = 8.0;
  double comm_deadline_s = 1.0;
  double protocol_overhead_factor = 1.0;

  void validate() const;
  bool operator==(const CostParams &) const = default;
};

/// One client's resource budget for one round.
struct Budget {
  double memory_bytes = 0.0;
  double bandwidth_bits_per_s = 0.0;

  bool operator==(const Budget &) const = default;
};

/// Peak training memory:
///   overhead * bytes_per_param * params
///     + bytes_per_activation * batch * (in_dim + sum of kept layer widths)
double memory_cost(const SearchSpace &space, const SubnetSpec &spec, std::size_t batch,
                   const CostParams &cost);

/// Bits moved per round: download plus upload of the subnet.
double round_payload_bits(const SearchSpace &space, const SubnetSpec &spec, const CostParams &cost);

/// Seconds to move `round_payload_bits` at the budget's bandwidth. Infinite
/// when the bandwidth is 0.
double comm_time(const SearchSpace &space, const SubnetSpec &spec, const CostParams &cost,
                 const Budget &budget);

/// Both constraints, boundary inclusive.
bool feasible(const SearchSpace &space, const SubnetSpec &spec, std::size_t batch,
              const CostParams &cost, const Budget &budget);

}  // namespace hetfed

#endif  // HETFED_COST_MODEL_HPP_
