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

#ifndef HETFED_RESOURCE_SIM_HPP_
#define HETFED_RESOURCE_SIM_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "hetfed/cost_model.hpp"
#include "hetfed/rng.hpp"

namespace hetfed {

/// Budget drawn per round from [min, max]; with `binary` only the two end
/// points are drawn, each with probability 1/2.
struct RangeLimit {
  double min = 0.0;
  double max = 0.0;
  bool binary = false;

  bool operator==(const RangeLimit &) const = default;
};

/// Budget replayed from timestamped logs. Clients map to files round-robin
/// by id; client i reads its file at t + i * phase_offset_s.
struct TraceLimit {
  std::vector<std::string> log_paths;
  double phase_offset_s = 0.0;

  bool operator==(const TraceLimit &) const = default;
};

struct ResourceLimit {
  std::variant<RangeLimit, TraceLimit> source = RangeLimit{};
  /// Unit of min/max (traces declare their own in the header). Memory: B, KB,
  /// MB, GB. Bandwidth: bps, Kbps, Mbps, Gbps.
  std::string unit;

  bool operator==(const ResourceLimit &) const = default;
};

struct LimitSpec {
  ResourceLimit memory{RangeLimit{}, "GB"};
  ResourceLimit bandwidth{RangeLimit{}, "Mbps"};

  void validate() const;
  bool operator==(const LimitSpec &) const = default;
};

/// Multiplier from `unit` to bytes (memory) or bits/s (bandwidth). Throws
/// ContractError on an unknown unit.
double memory_unit_scale(const std::string &unit);
double bandwidth_unit_scale(const std::string &unit);

struct TraceSample {
  double time_s = 0.0;
  double value = 0.0;
};

/// Step function of a resource over time. Also used for memory logs.
struct ResourceTrace {
  std::vector<TraceSample> samples;  // strictly increasing times
  std::string unit;  // from the header, empty if none

  /// Value of the last sample with time <= t; the first value before that.
  double value_at(double t) const;
};
using BandwidthTrace = ResourceTrace;

/// Parses the trace format: optional `#` header lines (a `unit=<u>` token
/// declares the unit), then `time_s,value` per line.
ResourceTrace parse_trace(std::istream &in, const std::string &source_name);
ResourceTrace load_trace(const std::filesystem::path &path);

struct LoadedTraces {
  std::vector<ResourceTrace> memory;
  std::vector<ResourceTrace> bandwidth;
};

/// Loads every trace referenced by `limits`, resolving relative paths
/// against `base_dir`.
LoadedTraces load_traces(const LimitSpec &limits, const std::filesystem::path &base_dir);

/// Budget of one client at simulated time t. Range limits consume `rng`
/// (memory first, then bandwidth); traces are pure lookups.
Budget budget_at(const LimitSpec &limits, const LoadedTraces &traces, std::size_t client_id,
                 double t, RandomEngine &rng);

/// Budget at a later time in the same round: trace-backed resources are
/// re-read at t, range-backed ones keep the value drawn at assignment.
Budget refresh_budget(const LimitSpec &limits, const LoadedTraces &traces, std::size_t client_id,
                      double t, const Budget &assigned);

/// What the assigned model actually needed during the round.
struct ActualCosts {
  double memory_bytes = 0.0;
  double payload_bits = 0.0;  // download + upload
};

/// True when the model exceeded the memory budget, or could not be moved
/// within the deadline, at assignment or at completion time.
bool check_failure(const Budget &at_assignment, const Budget &at_completion,
                   const ActualCosts &actual, const CostParams &cost);

/// Deterministic proxy for on-device training time: kappa * params * steps.
double train_time_estimate(std::size_t params, std::size_t local_steps, double kappa);

/// Simulated wall clock. Only modelled work advances it.
class SimClock {
 public:
  double now() const { return now_s_; }
  void advance(double seconds);

 private:
  double now_s_ = 0.0;
};

}  // namespace hetfed

#endif  // HETFED_RESOURCE_SIM_HPP_
