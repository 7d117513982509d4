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

#include "hetfed/search_space.hpp"

#include <charconv>
#include <cmath>

#include "hetfed/errors.hpp"
#include "hetfed/param_store.hpp"

namespace hetfed {

void SearchSpace::validate() const {
  if (in_dim < 1 || hidden_width < 1 || classes < 1) {
    throw ContractError("search space dims must be positive");
  }
  if (hidden_depth < 1) throw ContractError("search space needs at least one hidden layer");
  if (ratios.empty()) throw ContractError("ratio set is empty");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double r = ratios[i];
    if (!(r >= 0.0 && r <= 1.0)) throw ContractError("ratio outside [0, 1]");
    if (i > 0 && !(r > ratios[i - 1])) throw ContractError("ratio set must be strictly increasing");
  }
  if (ratios.back() != 1.0) throw ContractError("ratio set must contain 1");
}

nn::Index SearchSpace::width_for(double ratio) const {
  if (ratio <= 0.0) return 0;
  const auto w = static_cast<nn::Index>(std::llround(ratio * static_cast<double>(hidden_width)));
  return std::max<nn::Index>(1, w);
}

std::size_t SearchSpace::spec_count() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < hidden_depth; ++i) n *= ratios.size();
  return n;
}

std::string to_string(const SubnetSpec &spec) {
  std::string out = "[";
  char buf[32];
  for (std::size_t i = 0; i < spec.ratios.size(); ++i) {
    if (i > 0) out += ',';
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, spec.ratios[i]);
    out.append(buf, end);
  }
  out += ']';
  return out;
}

SubnetSpec parse_spec(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    throw ParseError("subnet spec must look like [v1,v2,...]: '" + std::string(text) + "'", 0);
  }
  text = text.substr(1, text.size() - 2);
  SubnetSpec spec;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = trim(text.substr(0, comma));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError("bad ratio '" + std::string(token) + "' in subnet spec", 0);
    }
    spec.ratios.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return spec;
}

SubnetSpec full_spec(const SearchSpace &space) {
  return SubnetSpec{std::vector<double>(space.hidden_depth, 1.0)};
}

SubnetSpec smallest_spec(const SearchSpace &space) {
  return SubnetSpec{std::vector<double>(space.hidden_depth, space.min_ratio())};
}

SubnetSpec uniform_spec(const SearchSpace &space, double ratio) {
  SubnetSpec spec{std::vector<double>(space.hidden_depth, ratio)};
  check_spec(space, spec);
  return spec;
}

void check_spec(const SearchSpace &space, const SubnetSpec &spec) {
  if (spec.ratios.size() != space.hidden_depth) {
    throw ContractError("spec " + to_string(spec) + " has " + std::to_string(spec.ratios.size()) +
                        " ratios, space has depth " + std::to_string(space.hidden_depth));
  }
  for (double v : spec.ratios) {
    if (std::find(space.ratios.begin(), space.ratios.end(), v) == space.ratios.end()) {
      throw ContractError("spec " + to_string(spec) + " uses a ratio outside the ratio set");
    }
  }
}

LayerSliceMap slice_map(const SearchSpace &space, const SubnetSpec &spec) {
  check_spec(space, spec);
  LayerSliceMap map;
  nn::Index prev = space.in_dim;
  for (std::size_t i = 0; i < space.hidden_depth; ++i) {
    const nn::Index width = space.width_for(spec.ratios[i]);
    if (width == 0) continue;
    map.push_back({i, prev, width});
    prev = width;
  }
  map.push_back({space.hidden_depth, prev, space.classes});
  return map;
}

std::size_t param_count(const SearchSpace &space, const SubnetSpec &spec) {
  check_spec(space, spec);
  std::size_t total = 0;
  auto prev = static_cast<std::size_t>(space.in_dim);
  for (double v : spec.ratios) {
    const auto width = static_cast<std::size_t>(space.width_for(v));
    if (width == 0) continue;
    total += prev * width + width;
    prev = width;
  }
  const auto k = static_cast<std::size_t>(space.classes);
  return total + prev * k + k;
}

std::pair<nn::MlpModel, LayerSliceMap> materialize(const SearchSpace &space,
                                                   const SubnetSpec &spec,
                                                   const ParamStore &store) {
  LayerSliceMap map = slice_map(space, spec);
  if (store.layer_count() != space.hidden_depth + 1) {
    throw ContractError("parameter store does not match the search space depth");
  }
  std::vector<nn::DenseLayer> layers;
  layers.reserve(map.size());
  for (const auto &s : map) {
    const auto &g = store.layer(s.global_layer);
    if (s.rows > g.in_width() || s.cols > g.out_width()) {
      throw ContractError("slice exceeds global layer " + std::to_string(s.global_layer));
    }
    nn::DenseLayer l;
    l.weights = g.weights.topLeftCorner(s.rows, s.cols);
    l.bias = g.bias.head(s.cols);
    layers.push_back(std::move(l));
  }
  return {nn::MlpModel(std::move(layers)), std::move(map)};
}

SubnetSpec random_spec(const SearchSpace &space, RandomEngine &rng) {
  std::uniform_int_distribution<std::size_t> pick(0, space.ratios.size() - 1);
  SubnetSpec spec;
  spec.ratios.reserve(space.hidden_depth);
  for (std::size_t i = 0; i < space.hidden_depth; ++i) spec.ratios.push_back(space.ratios[pick(rng)]);
  return spec;
}

std::vector<SubnetSpec> enumerate_specs(const SearchSpace &space) {
  const std::size_t m = space.ratios.size();
  std::vector<std::size_t> digits(space.hidden_depth, 0);
  std::vector<SubnetSpec> out;
  out.reserve(space.spec_count());
  while (true) {
    SubnetSpec spec;
    for (auto d : digits) spec.ratios.push_back(space.ratios[d]);
    out.push_back(std::move(spec));
    std::size_t pos = digits.size();
    while (pos > 0 && ++digits[pos - 1] == m) digits[--pos] = 0;
    if (pos == 0) break;
  }
  return out;
}

}  // namespace hetfed
