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

#include "hetfed/fed_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>

#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

constexpr int kMaxPartitionRedraws = 1000;

std::vector<double> dirichlet(std::size_t n, double alpha, RandomEngine &rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  while (!(total > 0.0)) {
    total = 0.0;
    for (auto &v : p) total += (v = gamma(rng));
  }
  for (auto &v : p) v /= total;
  return p;
}

}  // namespace

Dataset gen_synthetic(int classes, nn::Index in_dim, std::size_t per_class, std::uint64_t seed) {
  if (classes < 1 || in_dim < 1 || per_class < 1) {
    throw ContractError("gen_synthetic: classes, in_dim and per_class must be >= 1");
  }
  RandomEngine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  nn::Matrix means(classes, in_dim);
  for (int c = 0; c < classes; ++c) {
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (nn::Index j = 0; j < in_dim; ++j) means(c, j) = normal(rng);
      norm = means.row(c).norm();
    }
    means.row(c) *= kClassMeanRadius / norm;
  }

  Dataset data;
  data.classes = classes;
  const auto rows = static_cast<nn::Index>(per_class) * classes;
  data.features.resize(rows, in_dim);
  data.labels.reserve(static_cast<std::size_t>(rows));
  nn::Index r = 0;
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      for (nn::Index j = 0; j < in_dim; ++j) data.features(r, j) = means(c, j) + normal(rng);
      data.labels.push_back(c);
    }
  }
  return data;
}

Dataset subset(const Dataset &data, std::span<const std::size_t> rows) {
  Dataset out;
  out.classes = data.classes;
  out.features.resize(static_cast<nn::Index>(rows.size()), data.dims());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<nn::Index>(i)) = data.features.row(static_cast<nn::Index>(rows[i]));
    out.labels.push_back(data.labels.at(rows[i]));
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition_indices(const Dataset &data,
                                                        const PartitionPlan &plan) {
  if (data.size() == 0) throw ContractError("partition of an empty dataset");
  if (plan.clients < 1) throw ContractError("partition needs at least one client");
  if (plan.scheme == PartitionScheme::kDirichlet && !(plan.alpha > 0.0)) {
    throw ContractError("Dirichlet alpha must be positive");
  }
  if (plan.clients > data.size()) {
    throw ContractError("more clients than samples: someone would be left empty");
  }
  RandomEngine rng(plan.seed);
  const std::size_t n = plan.clients;

  if (plan.scheme == PartitionScheme::kIid) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> parts(n);
    const std::size_t base = order.size() / n;
    const std::size_t extra = order.size() % n;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t take = base + (i < extra ? 1 : 0);
      parts[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
    return parts;
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class.at(static_cast<std::size_t>(data.labels[i])).push_back(i);
  }
  for (int attempt = 0; attempt < kMaxPartitionRedraws; ++attempt) {
    std::vector<std::vector<std::size_t>> parts(n);
    for (auto members : by_class) {
      if (members.empty()) continue;
      std::shuffle(members.begin(), members.end(), rng);
      const auto p = dirichlet(n, plan.alpha, rng);
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += p[i];
        const std::size_t stop =
            (i + 1 == n) ? members.size()
                         : std::min(members.size(), static_cast<std::size_t>(std::llround(
                                                        cumulative * static_cast<double>(members.size()))));
        for (std::size_t k = start; k < std::max(start, stop); ++k) parts[i].push_back(members[k]);
        start = std::max(start, stop);
      }
    }
    if (std::none_of(parts.begin(), parts.end(), [](const auto &p) { return p.empty(); })) {
      for (auto &p : parts) std::sort(p.begin(), p.end());
      return parts;
    }
  }
  throw ContractError("Dirichlet partition left a client empty after " +
                      std::to_string(kMaxPartitionRedraws) + " redraws");
}

std::vector<Dataset> partition(const Dataset &data, const PartitionPlan &plan) {
  std::vector<Dataset> out;
  for (const auto &rows : partition_indices(data, plan)) out.push_back(subset(data, rows));
  return out;
}

Standardizer Standardizer::fit(const nn::Matrix &features) {
  if (features.rows() < 1) throw ContractError("cannot standardize an empty dataset");
  Standardizer s;
  s.mean = features.colwise().mean();
  const nn::Matrix centered = features.rowwise() - s.mean;
  const nn::RowVector var = centered.array().square().colwise().mean();
  s.inv_std = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 0.0; });
  return s;
}

nn::Matrix Standardizer::apply(const nn::Matrix &features) const {
  return ((features.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
}

ClientDataset standardize(const Dataset &data) {
  ClientDataset out = data;
  out.features = Standardizer::fit(data.features).apply(data.features);
  return out;
}

HoldoutSplit split_holdout(const Dataset &data, double test_fraction, RandomEngine &rng) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ContractError("test fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {subset(data, train), subset(data, test)};
}

Dataset load_csv_dataset(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string(), 0);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dims = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      auto token = rest.substr(0, comma);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(path.string() + ": bad number '" + std::string(token) + "'", lineno);
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() < 2) throw ParseError(path.string() + ": need features and a label", lineno);
    if (dims == 0) dims = values.size() - 1;
    if (values.size() - 1 != dims) throw ParseError(path.string() + ": ragged row", lineno);
    const double label = values.back();
    if (label < 0 || label != std::floor(label)) {
      throw ParseError(path.string() + ": label must be a nonnegative integer", lineno);
    }
    labels.push_back(static_cast<int>(label));
    values.pop_back();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no rows", 0);
  Dataset data;
  data.features.resize(static_cast<nn::Index>(rows.size()), static_cast<nn::Index>(dims));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < dims; ++c) data.features(static_cast<nn::Index>(r), static_cast<nn::Index>(c)) = rows[r][c];
  data.labels = std::move(labels);
  data.classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  return data;
}

}  // namespace hetfed
