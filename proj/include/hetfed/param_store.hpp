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

#ifndef HETFED_PARAM_STORE_HPP_
#define HETFED_PARAM_STORE_HPP_

#include <filesystem>
#include <vector>

#include "hetfed/nn.hpp"
#include "hetfed/rng.hpp"
#include "hetfed/search_space.hpp"

namespace hetfed {

/// Parameters of the global model at full dimensions. Every subnet is sliced
/// from, and aggregated back into, this store.
///
/// Layer 0 is in_dim x H; layers 1..d-1 are trunk_rows x H; the output layer
/// is trunk_rows x classes. With in_dim <= H the store is exactly the full
/// model.
class ParamStore {
 public:
  explicit ParamStore(const SearchSpace &space);

  /// Same init rule as MlpModel::random, with fan_in taken as the layer's
  /// nominal input width (in_dim for layer 0, H otherwise).
  static ParamStore random(const SearchSpace &space, RandomEngine &rng);

  const std::vector<nn::DenseLayer> &layers() const { return layers_; }
  std::vector<nn::DenseLayer> &mutable_layers() { return layers_; }
  const nn::DenseLayer &layer(std::size_t i) const { return layers_.at(i); }
  nn::DenseLayer &mutable_layer(std::size_t i) { return layers_.at(i); }
  std::size_t layer_count() const { return layers_.size(); }

  std::size_t param_count() const;
  bool all_finite() const;
  std::vector<double> flatten() const;
  bool same_shape(const ParamStore &other) const;

  /// Checkpoint: one text header line with the dims, then the parameters as
  /// 64-bit little-endian doubles in `flatten()` order.
  void save(const std::filesystem::path &path) const;
  /// Throws ParseError if the file is malformed or its dims differ from `space`.
  static ParamStore load(const std::filesystem::path &path, const SearchSpace &space);

 private:
  std::vector<nn::DenseLayer> layers_;
};

/// Largest absolute elementwise difference between two same-shaped stores.
double max_abs_diff(const ParamStore &a, const ParamStore &b);

}  // namespace hetfed

#endif  // HETFED_PARAM_STORE_HPP_
