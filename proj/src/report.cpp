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

#include "hetfed/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "json.hpp"

namespace hetfed {
namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(const std::optional<double> &v) { return v ? num(*v) : std::string(); }

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream &out, std::span<const RoundMetrics> rounds) {
  out << "round,accuracy,train_loss,mean_mem_util,mean_bw_util,hit_rate,failures,excluded,"
         "aggregated,sim_time_s,distill_initial_loss,distill_final_loss\n";
  for (const auto &m : rounds) {
    out << m.round << ',' << num(m.accuracy) << ',' << num(m.train_loss) << ','
        << num(m.mean_mem_util) << ',' << num(m.mean_bw_util) << ',' << num(m.hit_rate) << ','
        << m.failures << ',' << m.excluded << ',' << m.aggregated << ',' << num(m.sim_time_s) << ','
        << (m.distill ? num(m.distill->initial_loss) : "") << ','
        << (m.distill ? num(m.distill->final_loss) : "") << '\n';
  }
}

void write_assignments_csv(std::ostream &out, std::span<const RoundMetrics> rounds) {
  out << "round,client,spec,param_count,memory_budget_bytes,bandwidth_bps,mem_util,bw_util,"
         "random_tries,hit_tmax,feasible,excluded,failed,train_loss\n";
  for (const auto &m : rounds) {
    for (const auto &c : m.clients) {
      out << c.round << ',' << c.client << ",\"" << to_string(c.spec) << "\"," << c.param_count
          << ',' << num(c.budget.memory_bytes) << ',' << num(c.budget.bandwidth_bits_per_s) << ','
          << num(c.mem_util) << ',' << num(c.bw_util) << ',' << c.random_tries << ','
          << (c.hit_tmax ? 1 : 0) << ',' << (c.feasible ? 1 : 0) << ',' << (c.excluded ? 1 : 0)
          << ',' << (c.failed ? 1 : 0) << ',' << num(c.train_loss) << '\n';
    }
  }
}

std::string summary_json(const RunSummary &s, const ExperimentConfig &config) {
  nlohmann::ordered_json j;
  j["strategy"] = std::string(to_string(config.strategy));
  j["seed"] = config.seed;
  j["rounds"] = config.rounds;
  j["final_accuracy"] = s.final_accuracy;
  j["mean_mem_util"] = s.mean_mem_util;
  j["mean_bw_util"] = s.mean_bw_util;
  j["hit_rate"] = s.hit_rate ? nlohmann::ordered_json(*s.hit_rate) : nlohmann::ordered_json();
  j["failures"] = s.failures;
  j["excluded"] = s.excluded;
  j["sim_time_s"] = s.sim_time_s;
  j["streams"] = {{"selection", hex(s.digests.selection)},
                  {"budgets", hex(s.digests.budgets)},
                  {"partition", hex(s.digests.partition)}};
  return j.dump(2) + "\n";
}

void write_sweep_csv(std::ostream &out, std::span<const SweepRow> rows) {
  out << "epsilon,t_max,mean_mem_util,mean_bw_util,hit_rate,searches\n";
  for (const auto &r : rows) {
    out << num(r.epsilon) << ',' << r.t_max << ',' << num(r.mean_mem_util) << ','
        << num(r.mean_bw_util) << ',' << num(r.hit_rate) << ',' << r.searches << '\n';
  }
}

void write_compare_csv(std::ostream &out, std::span<const CompareRow> rows) {
  out << "strategy,final_accuracy,mean_mem_util,mean_bw_util,hit_rate,failures,excluded,"
         "sim_time_s,selection_stream,budget_stream,partition_stream\n";
  for (const auto &r : rows) {
    const auto &s = r.summary;
    out << to_string(r.strategy) << ',' << num(s.final_accuracy) << ',' << num(s.mean_mem_util)
        << ',' << num(s.mean_bw_util) << ',' << num(s.hit_rate) << ',' << s.failures << ','
        << s.excluded << ',' << num(s.sim_time_s) << ',' << hex(s.digests.selection) << ','
        << hex(s.digests.budgets) << ',' << hex(s.digests.partition) << '\n';
  }
}

void write_run_outputs(const std::filesystem::path &dir, const RunResult &result,
                       const ExperimentConfig &config) {
  std::filesystem::create_directories(dir);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  write_metrics_csv(metrics, result.rounds);
  std::ofstream assignments(dir / "assignments.csv", std::ios::binary);
  write_assignments_csv(assignments, result.rounds);
  std::ofstream summary(dir / "summary.json", std::ios::binary);
  summary << summary_json(result.summary, config);
  if (!metrics || !assignments || !summary) {
    throw std::runtime_error("failed writing outputs under " + dir.string());
  }
}

}  // namespace hetfed
