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

#ifndef HETFED_FED_DATA_HPP_
#define HETFED_FED_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hetfed/nn.hpp"
#include "hetfed/rng.hpp"

namespace hetfed {

/// Labeled feature matrix. Rows are samples.
struct Dataset {
  nn::Matrix features;
  std::vector<int> labels;
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  nn::Index dims() const { return features.cols(); }
};

/// A client's local data after per-client standardization.
using ClientDataset = Dataset;

enum class PartitionScheme { kIid, kDirichlet };

struct PartitionPlan {
  PartitionScheme scheme = PartitionScheme::kIid;
  std::size_t clients = 1;
  double alpha = 1.0;  // Dirichlet concentration
  std::uint64_t seed = 0;

  bool operator==(const PartitionPlan &) const = default;
};

/// Separation radius of the synthetic class means.
inline constexpr double kClassMeanRadius = 3.0;

/// `per_class` samples of each class c drawn from N(mu_c, I), with mu_c a
/// random direction scaled to kClassMeanRadius. Rows are grouped by class.
Dataset gen_synthetic(int classes, nn::Index in_dim, std::size_t per_class, std::uint64_t seed);

/// Rows of `data` selected by `rows`, in that order.
Dataset subset(const Dataset &data, std::span<const std::size_t> rows);

/// Disjoint row sets, one per client, covering every sample. Dirichlet:
/// each class is split across clients by a Dirichlet(alpha * 1) draw. Plans
/// that leave a client empty are redrawn a bounded number of times, then
/// rejected with ContractError.
std::vector<std::vector<std::size_t>> partition_indices(const Dataset &data,
                                                        const PartitionPlan &plan);

/// Raw (unstandardized) client subsets per `partition_indices`.
std::vector<Dataset> partition(const Dataset &data, const PartitionPlan &plan);

/// Per-feature affine map to zero mean, unit variance.
struct Standardizer {
  nn::RowVector mean;
  nn::RowVector inv_std;  // 0 for constant features

  static Standardizer fit(const nn::Matrix &features);
  nn::Matrix apply(const nn::Matrix &features) const;
};

/// Standardizes with the dataset's own moments. Constant features map to 0.
ClientDataset standardize(const Dataset &data);

struct HoldoutSplit {
  Dataset train;
  Dataset test;
};

/// Uniformly random split with round(fraction * n) test rows.
HoldoutSplit split_holdout(const Dataset &data, double test_fraction, RandomEngine &rng);

/// Reads `f1,...,fd,label` rows (no header). Throws ParseError with the line.
Dataset load_csv_dataset(const std::filesystem::path &path);

}  // namespace hetfed

#endif  // HETFED_FED_DATA_HPP_
