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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hetfed/cost_model.hpp"
#include "hetfed/errors.hpp"
#include "hetfed/resource_sim.hpp"

namespace hetfed {
namespace {

ResourceTrace parse(const std::string &text) {
  std::istringstream in(text);
  return parse_trace(in, "inline");
}

std::filesystem::path temp_file(const std::string &name, const std::string &text) {
  const auto path = std::filesystem::temp_directory_path() / ("hetfed_rs_" + name);
  std::ofstream(path) << text;
  return path;
}

TEST(Trace, ParsesTwoSamples) {
  const auto trace = parse("0,50\n10,75\n");
  ASSERT_EQ(trace.samples.size(), 2u);
  EXPECT_EQ(trace.samples[1].time_s, 10.0);
  EXPECT_EQ(trace.samples[1].value, 75.0);
  EXPECT_TRUE(trace.unit.empty());
}

TEST(Trace, HeaderDeclaresUnit) {
  EXPECT_EQ(parse("# unit=Kbps device=phone\n0,1\n").unit, "Kbps");
}

TEST(Trace, RejectsDecreasingTimestampsWithLine) {
  try {
    parse("# unit=Mbps\n0,50\n10,75\n5,20\n");
    FAIL() << "no error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse("0,1\n0,2\n"), ParseError);
}

TEST(Trace, RejectsMalformedAndEmpty) {
  EXPECT_THROW(parse("0;50\n"), ParseError);
  EXPECT_THROW(parse("0,abc\n"), ParseError);
  EXPECT_THROW(parse("0,-1\n"), ParseError);
  EXPECT_THROW(parse("# unit=Mbps\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(load_trace("/nonexistent/trace.csv"), ParseError);
}

TEST(Trace, StepHold) {
  const auto trace = parse("0,50\n10,75\n");
  EXPECT_EQ(trace.value_at(9.99), 50.0);
  EXPECT_EQ(trace.value_at(10.0), 75.0);
  EXPECT_EQ(trace.value_at(1e6), 75.0);
  const auto late = parse("5,3\n8,4\n");
  EXPECT_EQ(late.value_at(0.0), 3.0);  // before the first sample
}

TEST(Trace, HourLongTraceRoundTrips) {
  std::ostringstream gen;
  gen << "# unit=Mbps\n";
  for (int t = 0; t < 3600; ++t) gen << t << ',' << (t * 7919 % 1000) / 10.0 << '\n';
  const auto path = temp_file("hour.csv", gen.str());
  const auto trace = load_trace(path);
  ASSERT_EQ(trace.samples.size(), 3600u);
  for (int t = 0; t < 3600; ++t) {
    EXPECT_EQ(trace.value_at(t), (t * 7919 % 1000) / 10.0);
    EXPECT_EQ(trace.value_at(t + 0.5), (t * 7919 % 1000) / 10.0);
  }
  std::filesystem::remove(path);
}

LimitSpec range_limits(RangeLimit mem, RangeLimit bw) {
  return {{mem, "GB"}, {bw, "Mbps"}};
}

TEST(BudgetAt, BinaryRangeIsEquiprobable) {
  const auto limits = range_limits({4, 8, true}, {1, 2, false});
  RandomEngine rng(1);
  int low = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto b = budget_at(limits, {}, 0, 0.0, rng);
    ASSERT_TRUE(b.memory_bytes == 4e9 || b.memory_bytes == 8e9);
    low += b.memory_bytes == 4e9;
    EXPECT_GE(b.bandwidth_bits_per_s, 1e6);
    EXPECT_LE(b.bandwidth_bits_per_s, 2e6);
  }
  EXPECT_NEAR(static_cast<double>(low) / draws, 0.5, 0.02);
}

TEST(BudgetAt, UniformRangeMoments) {
  const auto limits = range_limits({0, 1, false}, {10, 30, false});
  RandomEngine rng(2);
  double sum = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) sum += budget_at(limits, {}, 0, 0.0, rng).bandwidth_bits_per_s;
  EXPECT_NEAR(sum / draws, 20e6, 0.2e6);
}

TEST(BudgetAt, TraceLookupUsesUnitsAndRoundRobin) {
  LimitSpec limits;
  limits.memory = {TraceLimit{{"a", "b"}, 0.0}, "GB"};
  limits.bandwidth = {TraceLimit{{"c"}, 2.0}, "Mbps"};
  LoadedTraces traces;
  traces.memory = {parse("# unit=MB\n0,100\n"), parse("0,3\n")};
  traces.bandwidth = {parse("0,50\n10,75\n")};
  RandomEngine rng(3);
  const auto before = rng;
  const auto b0 = budget_at(limits, traces, 0, 9.0, rng);
  EXPECT_EQ(b0.memory_bytes, 100e6);
  EXPECT_EQ(b0.bandwidth_bits_per_s, 50e6);
  const auto b1 = budget_at(limits, traces, 1, 9.0, rng);
  EXPECT_EQ(b1.memory_bytes, 3e9);  // header-less trace takes the configured unit
  EXPECT_EQ(b1.bandwidth_bits_per_s, 75e6);  // phase offset 2 s moves t to 11
  EXPECT_EQ(budget_at(limits, traces, 2, 0.0, rng).memory_bytes, 100e6);
  EXPECT_EQ(rng, before);  // trace lookups draw nothing
}

TEST(BudgetAt, ReplayIsDeterministic) {
  const auto limits = range_limits({1, 2, false}, {1, 2, true});
  RandomEngine a(4), b(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(budget_at(limits, {}, 0, i, a), budget_at(limits, {}, 0, i, b));
}

TEST(BudgetAt, NegativeTimeIsRejected) {
  RandomEngine rng(5);
  EXPECT_THROW(budget_at(range_limits({1, 2, false}, {1, 2, false}), {}, 0, -1.0, rng), ContractError);
}

TEST(RefreshBudget, RangeKeepsAssignedTraceRereads) {
  LimitSpec limits;
  limits.memory = {RangeLimit{1, 2, false}, "GB"};
  limits.bandwidth = {TraceLimit{{"c"}, 0.0}, "Mbps"};
  LoadedTraces traces;
  traces.bandwidth = {parse("0,50\n10,0\n")};
  const Budget assigned{1.5e9, 50e6};
  const auto later = refresh_budget(limits, traces, 0, 12.0, assigned);
  EXPECT_EQ(later.memory_bytes, 1.5e9);
  EXPECT_EQ(later.bandwidth_bits_per_s, 0.0);
}

TEST(LimitSpec, ValidateRejectsBadRanges) {
  EXPECT_THROW(range_limits({2, 1, false}, {1, 2, false}).validate(), ContractError);
  auto limits = range_limits({1, 2, false}, {1, 2, false});
  limits.memory.unit = "parsecs";
  EXPECT_THROW(limits.validate(), ContractError);
  limits = range_limits({1, 2, false}, {1, 2, false});
  limits.bandwidth = {TraceLimit{}, "Mbps"};
  EXPECT_THROW(limits.validate(), ContractError);
}

TEST(CheckFailure, UnchangedFeasibleBudgetNeverFails) {
  const CostParams cost;
  const ActualCosts actual{1000.0, 1e6};
  const Budget b{1000.0, 1e6};  // both exactly at the limit
  EXPECT_FALSE(check_failure(b, b, actual, cost));
}

TEST(CheckFailure, BandwidthDropToZeroFails) {
  const CostParams cost;
  const ActualCosts actual{1000.0, 1e5};
  EXPECT_TRUE(check_failure({2000.0, 1e6}, {2000.0, 0.0}, actual, cost));
}

TEST(CheckFailure, MemoryHalvingBelowCostFails) {
  // a trace that crosses the model's memory cost mid-round
  const double model_bytes = 29424.0;
  LimitSpec limits;
  limits.memory = {TraceLimit{{"m"}, 0.0}, "B"};
  limits.bandwidth = {RangeLimit{10, 10, false}, "Mbps"};
  LoadedTraces traces;
  traces.memory = {parse("0,40000\n5,20000\n")};
  RandomEngine rng(6);
  const auto start = budget_at(limits, traces, 0, 0.0, rng);
  const auto end = refresh_budget(limits, traces, 0, 6.0, start);
  const ActualCosts actual{model_bytes, 1e5};
  EXPECT_FALSE(check_failure(start, start, actual, CostParams{}));
  EXPECT_TRUE(check_failure(start, end, actual, CostParams{}));
}

TEST(CheckFailure, DeadlineUsesCompletionBandwidth) {
  CostParams cost;
  cost.comm_deadline_s = 2.0;
  const ActualCosts actual{0.0, 4e6};
  EXPECT_FALSE(check_failure({1.0, 2e6}, {1.0, 2e6}, actual, cost));
  EXPECT_TRUE(check_failure({1.0, 2e6}, {1.0, 1.9e6}, actual, cost));
}

TEST(SimClock, AdvancesMonotonically) {
  SimClock clock;
  clock.advance(1.5);
  clock.advance(0.0);
  EXPECT_EQ(clock.now(), 1.5);
  EXPECT_THROW(clock.advance(-1.0), ContractError);
  EXPECT_THROW(clock.advance(std::numeric_limits<double>::infinity()), ContractError);
}

TEST(TrainTime, IsLinearProxy) {
  EXPECT_DOUBLE_EQ(train_time_estimate(15242, 100, 1e-8), 15242 * 100 * 1e-8);
}

}  // namespace
}  // namespace hetfed
