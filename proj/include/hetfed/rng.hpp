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

#ifndef HETFED_RNG_HPP_
#define HETFED_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hetfed {

using RandomEngine = std::mt19937_64;

/// Derives an independent seed for one concern of an experiment.
///
/// Every consumer of randomness (client selection, budgets, data, search,
/// distillation, weight init, local training) gets its own stream keyed by a
/// label, so adding or removing draws in one stream never shifts another.
/// Extra keys (round, client id, ...) further split a stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::initializer_list<std::uint64_t> keys = {});

inline RandomEngine make_stream(std::uint64_t master, std::string_view label,
                                std::initializer_list<std::uint64_t> keys = {}) {
  return RandomEngine(derive_seed(master, label, keys));
}

/// Order-sensitive 64-bit digest used to fingerprint random streams in logs.
class StreamHash {
 public:
  void mix(std::uint64_t value);
  void mix(double value);
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace hetfed

#endif  // HETFED_RNG_HPP_
