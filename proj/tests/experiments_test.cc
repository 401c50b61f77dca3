//
// Copyright 2026 The Zeal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "zeal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"
#include "zeal/planner.hpp"

namespace zeal {
namespace {

std::string WriteFile(const std::string& name, const std::string& body) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << body;
  return path;
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& body) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) rows.push_back(internal::SplitCsvLine(line));
  return rows;
}

double Spread(const std::vector<double>& v) {
  const double mean = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

TEST(ExperimentsTest, IngestHumidityColumnByName) {
  const std::string path = WriteFile("humidity.csv", "time,humidity\n0,40.5\n1,62.25\n2,\"71.0\"\n");
  const Dataset d = IngestCsv(path, "humidity", 23.5, 83.9);
  EXPECT_EQ(d.values, (std::vector<double>{40.5, 62.25, 71.0}));
  EXPECT_DOUBLE_EQ(d.center, 53.7);
  EXPECT_DOUBLE_EQ(d.half_range, 30.2);
}

TEST(ExperimentsTest, IngestColumnByIndex) {
  const std::string headerless = WriteFile("headerless.csv", "3,1.5\n4,120\n\n5,60.5\n");
  const Dataset d = IngestCsv(headerless, "1", 1.0, 120.0);
  EXPECT_EQ(d.values, (std::vector<double>{1.5, 120.0, 60.5}));
  EXPECT_EQ(d.center, 60.5);
  EXPECT_EQ(d.half_range, 59.5);
  const std::string with_header = WriteFile("indexed.csv", "id,fare\n3,1.5\n");
  EXPECT_EQ(IngestCsv(with_header, "1", 1.0, 120.0).values, std::vector<double>{1.5});
}

TEST(ExperimentsTest, IngestErrors) {
  EXPECT_ZEAL_ERROR(IngestCsv(::testing::TempDir() + "/missing.csv", "0", 0.0, 1.0), ErrorCode::kFileNotFound);
  const std::string bad_cell = WriteFile("bad.csv", "v\n1.0\nabc\n");
  try {
    IngestCsv(bad_cell, "v", 0.0, 2.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonNumericCell);
    EXPECT_EQ(e.index(), 3u);
  }
  const std::string outside = WriteFile("outside.csv", "v\n1.0\n5.0\n1.5\n");
  EXPECT_ZEAL_ERROR(IngestCsv(outside, "v", 0.0, 2.0), ErrorCode::kOutOfFeasible);
  EXPECT_EQ(IngestCsv(outside, "v", 0.0, 2.0, true).values, (std::vector<double>{1.0, 1.5}));
  const std::string header_only = WriteFile("header_only.csv", "v\n");
  EXPECT_ZEAL_ERROR(IngestCsv(header_only, "v", 0.0, 2.0), ErrorCode::kEmptyDataset);
  EXPECT_ZEAL_ERROR(IngestCsv(outside, "w", 0.0, 2.0), ErrorCode::kConfigError);
  EXPECT_ZEAL_ERROR(IngestCsv(outside, "v", 2.0, 2.0), ErrorCode::kInvalidRange);
}

TEST(ExperimentsTest, ConfigValidation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.trials = 0;
  EXPECT_ZEAL_ERROR(c.Validate(), ErrorCode::kConfigError);
  c = ExperimentConfig{};
  c.epsilons.clear();
  EXPECT_ZEAL_ERROR(c.Validate(), ErrorCode::kConfigError);
  c = ExperimentConfig{};
  c.input = "data.csv";
  EXPECT_ZEAL_ERROR(c.Validate(), ErrorCode::kConfigError);
  c.feasible_min = 3.0;
  c.feasible_max = 1.0;
  EXPECT_ZEAL_ERROR(c.Validate(), ErrorCode::kConfigError);
  c = ExperimentConfig{};
  c.exponent_step = 0;
  EXPECT_ZEAL_ERROR(c.Validate(), ErrorCode::kConfigError);
}

TEST(ExperimentsTest, SyntheticDataIsDeterministicAndInRange) {
  const Dataset a = SyntheticUniform(5000, 10.0, 5.0, 1);
  const Dataset b = SyntheticUniform(5000, 10.0, 5.0, 1);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, SyntheticUniform(5000, 10.0, 5.0, 2).values);
  for (double v : a.values) {
    EXPECT_GE(v, 5.0);
    EXPECT_LE(v, 15.0);
  }
  EXPECT_NEAR(Mean(a.values), 10.0, 0.2);
  EXPECT_ZEAL_ERROR(SyntheticUniform(0, 10.0, 5.0, 1), ErrorCode::kConfigError);
}

TEST(ExperimentsTest, ParamsForEachMode) {
  ExperimentConfig c;
  const Dataset d = SyntheticUniform(10, 10.0, 5.0, 1);
  EXPECT_EQ(ParamsFor(c, 1.0, d).bias, 0.0);
  c.abar_mode = AbarMode::kRaw;
  c.raw_abar = 1e6;
  EXPECT_EQ(ParamsFor(c, 1.0, d).bias, 1e6);
  c.abar_mode = AbarMode::kPlanned;
  c.exponent = 6;
  std::optional<AbarPlan> plan;
  EXPECT_EQ(ParamsFor(c, 1.0, d, &plan).bias, AbarFor(DeriveParams(1.0, 10.0, 5.0), 6));
  ASSERT_TRUE(plan.has_value());
  EXPECT_EQ(plan->gamma_min, 12);
}

TEST(ExperimentsTest, SweepBiasesGrid) {
  const MechanismParams base = DeriveParams(1.0, 10.0, 5.0);
  const std::vector<double> b = SweepBiases(base, 4);
  EXPECT_EQ(b.front(), 0.0);
  EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
  EXPECT_NE(std::find(b.begin(), b.end(), AbarFor(base, 6)), b.end());
  EXPECT_NE(std::find(b.begin(), b.end(), AbarFor(base, 10)), b.end());
  EXPECT_NE(std::find(b.begin(), b.end(), 1e21), b.end());
}

TEST(ExperimentsTest, ErrorSweepIsDeterministic) {
  ExperimentConfig c;
  c.n = 200;
  c.trials = 5;
  c.epsilons = {0.5, 2.0};
  c.abar_mode = AbarMode::kSweep;
  c.exponent_step = 16;
  const std::string first = RunErrorSweep(c);
  EXPECT_EQ(first, RunErrorSweep(c));
  const auto rows = ParseCsv(first);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epsilon", "abar", "trial", "delta_avg"}));
  const std::size_t biases =
      SweepBiases(DeriveParams(0.5, 10.0, 5.0), 16).size() + SweepBiases(DeriveParams(2.0, 10.0, 5.0), 16).size();
  EXPECT_EQ(rows.size(), 1 + biases * 5);
  c.seed = 2;
  EXPECT_NE(first, RunErrorSweep(c));
}

TEST(ExperimentsTest, SmallerEpsilonSpreadsMore) {
  ExperimentConfig c;
  c.n = 500;
  const Dataset d = LoadDataset(c);
  const double wide = Spread(RelativeTrialErrors(DeriveParams(0.25, 10.0, 5.0), d, 200, 1));
  const double narrow = Spread(RelativeTrialErrors(DeriveParams(4.0, 10.0, 5.0), d, 200, 1));
  EXPECT_GT(wide, 2.0 * narrow);
}

TEST(ExperimentsTest, BoundCheckIgnoresTheBias) {
  ExperimentConfig c;
  c.n = 300;
  c.trials = 20;
  c.lambdas = {0.05, 0.2, 1.0};
  const auto zero = ParseCsv(RunBoundCheck(c));
  c.abar_mode = AbarMode::kPlanned;
  const auto planned = ParseCsv(RunBoundCheck(c));
  ASSERT_EQ(zero.size(), 4u);
  ASSERT_EQ(planned.size(), 4u);
  EXPECT_EQ(zero[0], (std::vector<std::string>{"lambda", "empirical_p", "bound_abs", "bound_rel"}));
  for (std::size_t i = 1; i < zero.size(); ++i) {
    EXPECT_EQ(zero[i][2], planned[i][2]);
    EXPECT_EQ(zero[i][3], planned[i][3]);
  }
}

TEST(ExperimentsTest, TrCrSweepTrends) {
  ExperimentConfig c;
  c.n = 400;
  c.trials = 3;
  const Dataset d = LoadDataset(c);
  const std::vector<TrCrRow> rows = TrCrSweep(c, d);
  ASSERT_GT(rows.size(), 30u);
  EXPECT_EQ(rows.front().exponent, 6);
  EXPECT_EQ(rows.front().gamma_min, 12);
  EXPECT_GT(rows.back().abar, 1e21);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].exponent, rows[i - 1].exponent + 1);
    EXPECT_LE(rows[i].tr, rows[i - 1].tr);
    EXPECT_EQ(rows[i].tr, 1.0 - rows[i].gamma_min / 64.0);
  }
  // Large biases wipe out the data entirely.
  EXPECT_GT(rows.back().delta_avg, 0.5);
  EXPECT_LT(rows.front().delta_avg, 0.2);
  EXPECT_LT(rows.back().cr_priv, rows.front().cr_priv);
  const std::string csv = RunTrCrSweep(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "abar,exponent,gamma_min,tr,cr_priv,f_estimate,delta_avg");
  EXPECT_EQ(csv, RunTrCrSweep(c));
}

TEST(ExperimentsTest, AuditVerdicts) {
  ExperimentConfig c;
  const AuditRun zero = RunAudit(c, std::nullopt, std::nullopt, std::uint64_t{1} << 14);
  EXPECT_TRUE(zero.verdict.vulnerable);
  EXPECT_NE(zero.report.find("x_j = 15\n"), std::string::npos);
  c.abar_mode = AbarMode::kPlanned;
  const AuditRun planned = RunAudit(c, std::nullopt, std::nullopt, std::uint64_t{1} << 14);
  EXPECT_FALSE(planned.verdict.vulnerable);
  EXPECT_NE(planned.report.find("vulnerable = false"), std::string::npos);
}

}  // namespace
}  // namespace zeal
