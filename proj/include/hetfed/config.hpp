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

#ifndef HETFED_CONFIG_HPP_
#define HETFED_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "hetfed/orchestrator.hpp"

namespace hetfed {

struct LoadedConfig {
  ExperimentConfig config;
  /// One line per key that was absent and took its default.
  std::vector<std::string> notices;
};

/// Parses an experiment file. Unknown keys, anchors/aliases, bad values and
/// invalid settings throw ConfigError (with the line number where known).
/// Relative trace paths resolve against `base_dir`.
LoadedConfig parse_config(const std::string &text, const std::filesystem::path &base_dir = {});
LoadedConfig load_config(const std::filesystem::path &path);

/// Emits every setting; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig &config);

}  // namespace hetfed

#endif  // HETFED_CONFIG_HPP_
