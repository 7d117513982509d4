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

#ifndef HETFED_SEARCH_SPACE_HPP_
#define HETFED_SEARCH_SPACE_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetfed/nn.hpp"
#include "hetfed/rng.hpp"

namespace hetfed {

class ParamStore;

/// Architecture space of the global model: `hidden_depth` hidden layers of
/// base width `hidden_width` followed by a fixed output layer, and a ratio set
/// offering the width options of each hidden layer. A ratio of 0 removes the
/// layer; 1 keeps it at full width.
struct SearchSpace {
  nn::Index in_dim = 1;
  nn::Index hidden_width = 1;
  std::size_t hidden_depth = 1;
  nn::Index classes = 2;
  std::vector<double> ratios{1.0};  // strictly increasing, last == 1

  /// Throws ContractError when an invariant does not hold.
  void validate() const;

  double min_ratio() const { return ratios.front(); }
  /// Output width of a hidden layer at ratio v; 0 means the layer is skipped.
  nn::Index width_for(double ratio) const;
  /// Rows of global hidden/output layers past the first. Large enough for
  /// any kept layer to read either `in_dim` or `hidden_width` inputs.
  nn::Index trunk_rows() const { return std::max(in_dim, hidden_width); }
  /// Number of distinct subnet specs, |S|^d.
  std::size_t spec_count() const;

  bool operator==(const SearchSpace &) const = default;
};

/// Per-hidden-layer ratios; the output layer is never searched.
struct SubnetSpec {
  std::vector<double> ratios;

  auto operator<=>(const SubnetSpec &) const = default;
  bool operator==(const SubnetSpec &) const = default;
};

/// Text form used in logs, e.g. "[1,0.5,0,1]".
std::string to_string(const SubnetSpec &spec);
/// Inverse of to_string. Throws ParseError.
SubnetSpec parse_spec(std::string_view text);

/// Portion of one global layer addressed by a subnet layer. Both ranges are
/// prefixes: rows [0, rows), columns [0, cols).
struct LayerSlice {
  std::size_t global_layer = 0;
  nn::Index rows = 0;
  nn::Index cols = 0;

  bool operator==(const LayerSlice &) const = default;
};

using LayerSliceMap = std::vector<LayerSlice>;

SubnetSpec full_spec(const SearchSpace &space);
SubnetSpec smallest_spec(const SearchSpace &space);
/// The uniform-prune spec, every hidden layer at `ratio`. Throws ContractError
/// when `ratio` is not in the set.
SubnetSpec uniform_spec(const SearchSpace &space, double ratio);

/// Throws ContractError if the spec does not belong to the space.
void check_spec(const SearchSpace &space, const SubnetSpec &spec);

/// Layer wiring of a subnet: each kept layer reads the previous kept layer's
/// width (or `in_dim` for the first), the output layer is always present.
LayerSliceMap slice_map(const SearchSpace &space, const SubnetSpec &spec);

/// Scalar parameter count of the materialized subnet, computed without
/// building it.
std::size_t param_count(const SearchSpace &space, const SubnetSpec &spec);

/// Copies the prefix slices of the global store into a standalone model.
std::pair<nn::MlpModel, LayerSliceMap> materialize(const SearchSpace &space,
                                                   const SubnetSpec &spec,
                                                   const ParamStore &store);

/// Each ratio drawn independently and uniformly from the ratio set.
SubnetSpec random_spec(const SearchSpace &space, RandomEngine &rng);

/// All |S|^d specs in lexicographic order. Only sensible for small spaces.
std::vector<SubnetSpec> enumerate_specs(const SearchSpace &space);

}  // namespace hetfed

#endif  // HETFED_SEARCH_SPACE_HPP_
