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

#include "hetfed/resource_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string_view>

#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double &out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

void validate_range(const RangeLimit &r, const char *name) {
  if (!(r.min >= 0.0) || !(r.max >= r.min) || !std::isfinite(r.max)) {
    throw ContractError(std::string(name) + " limit needs 0 <= min <= max");
  }
}

double draw(const RangeLimit &r, RandomEngine &rng) {
  if (r.binary) {
    std::bernoulli_distribution coin(0.5);
    return coin(rng) ? r.max : r.min;
  }
  std::uniform_real_distribution<double> dist(r.min, r.max);
  return r.min == r.max ? r.min : dist(rng);
}

double resolve(const ResourceLimit &limit, const std::vector<ResourceTrace> &traces,
               double (*scale)(const std::string &), std::size_t client_id, double t,
               RandomEngine &rng) {
  if (const auto *range = std::get_if<RangeLimit>(&limit.source)) {
    return draw(*range, rng) * scale(limit.unit);
  }
  const auto &trace_limit = std::get<TraceLimit>(limit.source);
  if (traces.empty()) throw ContractError("trace limit configured but no traces loaded");
  const auto &trace = traces[client_id % traces.size()];
  const double when = t + static_cast<double>(client_id) * trace_limit.phase_offset_s;
  return trace.value_at(when) * scale(trace.unit.empty() ? limit.unit : trace.unit);
}

}  // namespace

void LimitSpec::validate() const {
  memory_unit_scale(memory.unit);
  bandwidth_unit_scale(bandwidth.unit);
  if (const auto *r = std::get_if<RangeLimit>(&memory.source)) validate_range(*r, "memory");
  if (const auto *r = std::get_if<RangeLimit>(&bandwidth.source)) validate_range(*r, "bandwidth");
  for (const auto *l : {&memory, &bandwidth}) {
    if (const auto *t = std::get_if<TraceLimit>(&l->source); t && t->log_paths.empty()) {
      throw ContractError("trace limit needs at least one log path");
    }
  }
}

double memory_unit_scale(const std::string &unit) {
  if (unit == "B") return 1.0;
  if (unit == "KB") return 1e3;
  if (unit == "MB") return 1e6;
  if (unit == "GB") return 1e9;
  throw ContractError("unknown memory unit '" + unit + "' (expected B, KB, MB or GB)");
}

double bandwidth_unit_scale(const std::string &unit) {
  if (unit == "bps" || unit == "b/s") return 1.0;
  if (unit == "Kbps" || unit == "Kb/s") return 1e3;
  if (unit == "Mbps" || unit == "Mb/s") return 1e6;
  if (unit == "Gbps" || unit == "Gb/s") return 1e9;
  throw ContractError("unknown bandwidth unit '" + unit + "' (expected bps, Kbps, Mbps or Gbps)");
}

double ResourceTrace::value_at(double t) const {
  if (samples.empty()) throw ContractError("value_at on an empty trace");
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double v, const TraceSample &s) { return v < s.time_s; });
  if (it == samples.begin()) return samples.front().value;
  return std::prev(it)->value;
}

ResourceTrace parse_trace(std::istream &in, const std::string &source_name) {
  ResourceTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (const auto pos = view.find("unit="); pos != std::string_view::npos) {
        auto rest = view.substr(pos + 5);
        trace.unit = std::string(rest.substr(0, rest.find_first_of(" \t,")));
      }
      continue;
    }
    const auto comma = view.find(',');
    TraceSample s;
    if (comma == std::string_view::npos || !parse_double(view.substr(0, comma), s.time_s) ||
        !parse_double(view.substr(comma + 1), s.value)) {
      throw ParseError(source_name + ": expected 'time_s,value', got '" + line + "'", lineno);
    }
    if (s.time_s < 0.0 || s.value < 0.0) {
      throw ParseError(source_name + ": negative time or value", lineno);
    }
    if (!trace.samples.empty() && !(s.time_s > trace.samples.back().time_s)) {
      throw ParseError(source_name + ": timestamps must be strictly increasing", lineno);
    }
    trace.samples.push_back(s);
  }
  if (trace.samples.empty()) throw ParseError(source_name + ": trace has no samples", 0);
  return trace;
}

ResourceTrace load_trace(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace " + path.string(), 0);
  return parse_trace(in, path.string());
}

LoadedTraces load_traces(const LimitSpec &limits, const std::filesystem::path &base_dir) {
  LoadedTraces out;
  auto load_all = [&](const ResourceLimit &l, std::vector<ResourceTrace> &dst) {
    if (const auto *t = std::get_if<TraceLimit>(&l.source)) {
      for (const auto &p : t->log_paths) {
        std::filesystem::path path(p);
        dst.push_back(load_trace(path.is_absolute() ? path : base_dir / path));
      }
    }
  };
  load_all(limits.memory, out.memory);
  load_all(limits.bandwidth, out.bandwidth);
  return out;
}

Budget budget_at(const LimitSpec &limits, const LoadedTraces &traces, std::size_t client_id,
                 double t, RandomEngine &rng) {
  if (t < 0.0) throw ContractError("budget_at: negative time");
  Budget b;
  b.memory_bytes = resolve(limits.memory, traces.memory, memory_unit_scale, client_id, t, rng);
  b.bandwidth_bits_per_s =
      resolve(limits.bandwidth, traces.bandwidth, bandwidth_unit_scale, client_id, t, rng);
  return b;
}

Budget refresh_budget(const LimitSpec &limits, const LoadedTraces &traces, std::size_t client_id,
                      double t, const Budget &assigned) {
  Budget b = assigned;
  RandomEngine unused(0);
  if (std::holds_alternative<TraceLimit>(limits.memory.source)) {
    b.memory_bytes = resolve(limits.memory, traces.memory, memory_unit_scale, client_id, t, unused);
  }
  if (std::holds_alternative<TraceLimit>(limits.bandwidth.source)) {
    b.bandwidth_bits_per_s =
        resolve(limits.bandwidth, traces.bandwidth, bandwidth_unit_scale, client_id, t, unused);
  }
  return b;
}

bool check_failure(const Budget &at_assignment, const Budget &at_completion,
                   const ActualCosts &actual, const CostParams &cost) {
  for (const Budget *b : {&at_assignment, &at_completion}) {
    if (actual.memory_bytes > b->memory_bytes) return true;
    if (!(b->bandwidth_bits_per_s > 0.0)) return true;
    if (actual.payload_bits / b->bandwidth_bits_per_s > cost.comm_deadline_s) return true;
  }
  return false;
}

double train_time_estimate(std::size_t params, std::size_t local_steps, double kappa) {
  return kappa * static_cast<double>(params) * static_cast<double>(local_steps);
}

void SimClock::advance(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw ContractError("clock can only advance by a finite nonnegative amount");
  }
  now_s_ += seconds;
}

}  // namespace hetfed
