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

#ifndef HETFED_REPORT_HPP_
#define HETFED_REPORT_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hetfed/orchestrator.hpp"

namespace hetfed {

/// Per-round metrics, one row per round. Reals are printed with 17
/// significant digits so identical runs give identical bytes; missing values
/// are empty fields.
void write_metrics_csv(std::ostream &out, std::span<const RoundMetrics> rounds);
/// Per-client assignment rows.
void write_assignments_csv(std::ostream &out, std::span<const RoundMetrics> rounds);
/// Headline numbers of a run.
std::string summary_json(const RunSummary &summary, const ExperimentConfig &config);

void write_sweep_csv(std::ostream &out, std::span<const SweepRow> rows);

struct CompareRow {
  Strategy strategy = Strategy::kFlexibleSearch;
  RunSummary summary;
};
void write_compare_csv(std::ostream &out, std::span<const CompareRow> rows);

/// Writes metrics.csv, assignments.csv and summary.json under `dir`.
void write_run_outputs(const std::filesystem::path &dir, const RunResult &result,
                       const ExperimentConfig &config);

}  // namespace hetfed

#endif  // HETFED_REPORT_HPP_
