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

#include "hetfed/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "hetfed/errors.hpp"

namespace hetfed {

ParamStore::ParamStore(const SearchSpace &space) {
  space.validate();
  layers_.emplace_back(space.in_dim, space.hidden_width);
  for (std::size_t i = 1; i < space.hidden_depth; ++i) {
    layers_.emplace_back(space.trunk_rows(), space.hidden_width);
  }
  layers_.emplace_back(space.trunk_rows(), space.classes);
}

ParamStore ParamStore::random(const SearchSpace &space, RandomEngine &rng) {
  ParamStore store(space);
  for (std::size_t i = 0; i < store.layers_.size(); ++i) {
    auto &layer = store.layers_[i];
    const auto fan_in = static_cast<double>(i == 0 ? space.in_dim : space.hidden_width);
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (nn::Index r = 0; r < layer.weights.rows(); ++r)
      for (nn::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    for (nn::Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = dist(rng);
  }
  return store;
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto &l : layers_) n += l.param_count();
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto &l : layers_)
    if (!l.all_finite()) return false;
  return true;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto &l : layers_) {
    out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

bool ParamStore::same_shape(const ParamStore &other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (!layers_[i].same_shape(other.layers_[i])) return false;
  return true;
}

namespace {

std::string header_for(const ParamStore &store) {
  std::ostringstream os;
  os << "hetfed-checkpoint v1 layers=" << store.layer_count();
  for (const auto &l : store.layers()) os << ' ' << l.in_width() << 'x' << l.out_width();
  os << " params=" << store.param_count();
  return os.str();
}

}  // namespace

void ParamStore::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << header_for(*this) << '\n';
  for (double v : flatten()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes, 8);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path &path, const SearchSpace &space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path.string(), 0);
  std::string header;
  std::getline(in, header);
  ParamStore store(space);
  if (header != header_for(store)) {
    throw ParseError("checkpoint header '" + header + "' does not match expected '" +
                     header_for(store) + "'", 1);
  }
  for (auto &l : store.layers_) {
    auto read_into = [&](double *data, nn::Index n) {
      for (nn::Index k = 0; k < n; ++k) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char *>(bytes), 8)) {
          throw ParseError("checkpoint truncated: " + path.string(), 0);
        }
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        data[k] = std::bit_cast<double>(bits);
      }
    };
    read_into(l.weights.data(), l.weights.size());
    read_into(l.bias.data(), l.bias.size());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("checkpoint has trailing bytes: " + path.string(), 0);
  }
  return store;
}

double max_abs_diff(const ParamStore &a, const ParamStore &b) {
  if (!a.same_shape(b)) throw ShapeError("parameter stores differ in shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.layer_count(); ++i) {
    m = std::max(m, (a.layer(i).weights - b.layer(i).weights).cwiseAbs().maxCoeff());
    m = std::max(m, (a.layer(i).bias - b.layer(i).bias).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace hetfed
