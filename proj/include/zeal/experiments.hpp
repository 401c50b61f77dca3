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

// Experiment drivers behind the command-line tool: dataset ingestion,
// synthetic data and the sweeps that produce the CSV tables. Every run is a
// pure function of its config, so equal configs give byte-identical output.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zeal/aggregate.hpp"
#include "zeal/audit.hpp"
#include "zeal/codec.hpp"
#include "zeal/compressmeter.hpp"
#include "zeal/error.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/planner.hpp"
#include "zeal/random.hpp"
#include "zeal/text.hpp"

namespace zeal {

struct Dataset {
  std::vector<double> values;
  double center = 0.0;
  double half_range = 0.0;
};

enum class AbarMode { kZero, kPlanned, kRaw, kSweep };

struct ExperimentConfig {
  std::optional<std::string> input;  // CSV path; synthetic data otherwise
  std::string column = "0";          // header name or zero-based index
  std::optional<double> feasible_min;
  std::optional<double> feasible_max;
  bool skip_out_of_feasible = false;

  std::size_t n = 1000;  // synthetic size
  double center = 10.0;
  double half_range = 5.0;

  std::vector<double> epsilons = {1.0};
  AbarMode abar_mode = AbarMode::kZero;
  std::optional<int> exponent;  // fixed exponent for kPlanned
  double raw_abar = 0.0;        // for kRaw
  std::optional<double> max_f;
  int exponent_step = 4;  // error sweep; the TR/CR sweep always steps by 1

  int trials = 10;
  std::uint64_t seed = 1;
  std::vector<double> lambdas;  // empty selects the default grid
  std::string external_compressor;

  void Validate() const {
    if (trials < 1) throw Error(ErrorCode::kConfigError, "trials must be at least 1");
    if (!input && n < 1) throw Error(ErrorCode::kConfigError, "synthetic datasets need n >= 1");
    if (epsilons.empty()) throw Error(ErrorCode::kConfigError, "at least one epsilon is required");
    if (input && (!feasible_min || !feasible_max)) {
      throw Error(ErrorCode::kConfigError, "CSV input needs --feasible-min and --feasible-max");
    }
    if (feasible_min && feasible_max && !(*feasible_min < *feasible_max)) {
      throw Error(ErrorCode::kConfigError, "feasible-min must be below feasible-max");
    }
    if (exponent_step < 1) throw Error(ErrorCode::kConfigError, "exponent step must be positive");
  }
};

namespace internal {

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.emplace_back(text::Trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.emplace_back(text::Trim(cell));
  return cells;
}

}  // namespace internal

// Reads one numeric column. center and half_range come from the declared
// feasible interval, not from the data. Row numbers in errors are 1-based
// file lines.
inline Dataset IngestCsv(const std::string& path, const std::string& column, double feasible_min,
                         double feasible_max, bool skip_out_of_feasible = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  if (!(feasible_min < feasible_max) || !std::isfinite(feasible_min) || !std::isfinite(feasible_max)) {
    throw Error(ErrorCode::kInvalidRange, "feasible interval must be finite and non-empty");
  }
  Dataset d;
  d.center = (feasible_min + feasible_max) / 2.0;
  d.half_range = (feasible_max - feasible_min) / 2.0;

  std::optional<std::size_t> index;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (text::Trim(line).empty()) continue;
    const std::vector<std::string> cells = internal::SplitCsvLine(line);
    if (first) {
      first = false;
      const auto named = std::find(cells.begin(), cells.end(), column);
      if (named != cells.end()) {
        index = static_cast<std::size_t>(named - cells.begin());
        continue;
      }
      const auto parsed = text::ParseInt(column);
      if (!parsed || *parsed < 0) throw Error(ErrorCode::kConfigError, "no column named " + column);
      index = static_cast<std::size_t>(*parsed);
      // A non-numeric first row is a header.
      if (*index < cells.size() && !text::ParseDouble(cells[*index])) continue;
    }
    if (*index >= cells.size()) {
      throw Error(ErrorCode::kNonNumericCell, "row " + std::to_string(row) + ": missing column", row);
    }
    const auto value = text::ParseDouble(cells[*index]);
    if (!value || !std::isfinite(*value)) {
      throw Error(ErrorCode::kNonNumericCell, "row " + std::to_string(row) + ": '" + cells[*index] + "'", row);
    }
    if (*value < feasible_min || *value > feasible_max) {
      if (skip_out_of_feasible) continue;
      throw Error(ErrorCode::kOutOfFeasible, "row " + std::to_string(row) + ": " + cells[*index], row);
    }
    d.values.push_back(*value);
  }
  if (d.values.empty()) throw Error(ErrorCode::kEmptyDataset, path + " has no data rows");
  return d;
}

// Uniform on [center - h, center + h], drawn from its own counter stream so
// it never overlaps the perturbation streams.
inline constexpr std::uint64_t kSyntheticStream = 0x5eed5eed5eed5eedULL;

inline Dataset SyntheticUniform(std::size_t n, double center, double half_range, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kConfigError, "synthetic datasets need n >= 1");
  if (!(half_range > 0.0) || !std::isfinite(half_range) || !std::isfinite(center)) {
    throw Error(ErrorCode::kInvalidRange, "synthetic range must be finite and non-empty");
  }
  const CounterUniform uniform(seed, kSyntheticStream);
  Dataset d;
  d.center = center;
  d.half_range = half_range;
  d.values.reserve(n);
  const double lo = center - half_range;
  const double hi = center + half_range;
  for (std::size_t i = 0; i < n; ++i) d.values.push_back(std::clamp(lo + 2.0 * half_range * uniform(i), lo, hi));
  return d;
}

inline Dataset LoadDataset(const ExperimentConfig& config) {
  if (config.input) {
    return IngestCsv(*config.input, config.column, *config.feasible_min, *config.feasible_max,
                     config.skip_out_of_feasible);
  }
  return SyntheticUniform(config.n, config.center, config.half_range, config.seed);
}

// Bias for a single-bias run: zero, raw, or planned (fixed or automatic
// exponent). Sweep mode falls back to the automatic plan.
inline MechanismParams ParamsFor(const ExperimentConfig& config, double epsilon, const Dataset& data,
                                 std::optional<AbarPlan>* plan_out = nullptr) {
  const MechanismParams base = DeriveParams(epsilon, data.center, data.half_range);
  switch (config.abar_mode) {
    case AbarMode::kZero:
      return base;
    case AbarMode::kRaw:
      return WithBias(base, config.raw_abar);
    case AbarMode::kPlanned:
    case AbarMode::kSweep: {
      const AbarPlan plan = Plan(base, config.exponent, config.max_f);
      if (plan_out) *plan_out = plan;
      return plan.params;
    }
  }
  return base;
}

// Bias grid for the error sweep: 0, planned exponents from the vulnerability
// exponent up in `step`s, and raw decades 1e3 .. 1e21.
inline std::vector<double> SweepBiases(const MechanismParams& base, int step) {
  std::vector<double> out = {0.0};
  for (int e = VulnerabilityExponent(base); e <= 70; e += step) {
    try {
      out.push_back(AbarFor(base, e));
    } catch (const Error&) {
      // The closed-form exponent can miss by one; skip it.
    }
  }
  for (int k = 3; k <= 21; ++k) out.push_back(std::pow(10.0, k));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<double> RelativeTrialErrors(const MechanismParams& params, const Dataset& data, int trials,
                                               std::uint64_t seed) {
  const double truth = Mean(data.values);
  if (truth == 0.0) throw Error(ErrorCode::kZeroTrueAverage, "relative error needs a nonzero average");
  std::vector<double> errors = TrialAverageErrors(params, data.values, trials, seed);
  for (double& e : errors) e /= truth;
  return errors;
}

// epsilon,abar,trial,delta_avg with delta_avg the signed relative error.
inline std::string RunErrorSweep(const ExperimentConfig& config) {
  config.Validate();
  const Dataset data = LoadDataset(config);
  std::ostringstream out;
  out << "epsilon,abar,trial,delta_avg\n";
  for (double epsilon : config.epsilons) {
    const MechanismParams base = DeriveParams(epsilon, data.center, data.half_range);
    std::vector<double> biases;
    if (config.abar_mode == AbarMode::kSweep) {
      biases = SweepBiases(base, config.exponent_step);
    } else {
      biases = {ParamsFor(config, epsilon, data).bias};
    }
    for (double bias : biases) {
      const std::vector<double> errors = RelativeTrialErrors(WithBias(base, bias), data, config.trials, config.seed);
      for (int t = 0; t < config.trials; ++t) {
        out << text::FormatDouble(epsilon) << ',' << text::FormatDouble(bias) << ',' << t << ','
            << text::FormatDouble(errors[static_cast<std::size_t>(t)]) << '\n';
      }
    }
  }
  return out.str();
}

inline std::string RunBoundCheck(const ExperimentConfig& config) {
  config.Validate();
  const Dataset data = LoadDataset(config);
  const MechanismParams params = ParamsFor(config, config.epsilons.front(), data);
  const std::vector<double> lambdas = config.lambdas.empty() ? DefaultLambdaGrid(params) : config.lambdas;
  const std::vector<BoundRow> rows = EmpiricalBoundCheck(params, data.values, lambdas, config.trials, config.seed);
  return BoundRowsCsv(rows);
}

struct TrCrRow {
  double abar = 0.0;
  int exponent = 0;
  int gamma_min = 0;
  double tr = 1.0;
  double cr_priv = 1.0;
  double f_estimate = 0.0;
  double delta_avg = 0.0;  // mean |relative error of the average| over trials
};

// One row per exponent from the vulnerability exponent up to the one whose
// bias first exceeds 1e21, which is well past the finite-precision cliff for
// any realistic range. The encoded frame size is checked against TR on every
// row; CR is measured on the trial-0 dataset.
inline std::vector<TrCrRow> TrCrSweep(const ExperimentConfig& config, const Dataset& data) {
  const MechanismParams base = DeriveParams(config.epsilons.front(), data.center, data.half_range);
  std::vector<TrCrRow> rows;
  for (int e = VulnerabilityExponent(base); e <= kMaxPlanExponent; ++e) {
    AbarPlan plan;
    try {
      plan = PlanAt(base, e);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kExponentTooSmall) continue;
      throw;
    }
    TrCrRow row;
    row.abar = plan.abar;
    row.exponent = e;
    row.gamma_min = plan.gamma_min;
    row.tr = plan.transmission_ratio;
    row.f_estimate = plan.f_estimate;
    const PrivatizedDataset first = PerturbDataset(plan.params, data.values, config.seed, 0);
    const codec::WireFrame frame = codec::Encode(plan, first);
    if (frame.payload.size() != codec::PayloadBytes(first.size(), codec::PayloadBitsPerSample(plan))) {
      throw Error(ErrorCode::kInvalidFrame, "encoded size disagrees with TR");
    }
    row.cr_priv = compress::SurrogateRatio(first.samples);
    const std::vector<double> errors = RelativeTrialErrors(plan.params, data, config.trials, config.seed);
    double sum = 0.0;
    for (double err : errors) sum += std::fabs(err);
    row.delta_avg = sum / static_cast<double>(errors.size());
    rows.push_back(row);
    if (plan.abar > 1e21) break;
  }
  return rows;
}

inline std::string RunTrCrSweep(const ExperimentConfig& config) {
  config.Validate();
  const Dataset data = LoadDataset(config);
  std::ostringstream out;
  out << "abar,exponent,gamma_min,tr,cr_priv,f_estimate,delta_avg\n";
  for (const TrCrRow& r : TrCrSweep(config, data)) {
    out << text::FormatDouble(r.abar) << ',' << r.exponent << ',' << r.gamma_min << ',' << text::FormatDouble(r.tr)
        << ',' << text::FormatDouble(r.cr_priv) << ',' << text::FormatDouble(r.f_estimate) << ','
        << text::FormatDouble(r.delta_avg) << '\n';
  }
  return out.str();
}

struct AuditRun {
  audit::AuditVerdict verdict;
  std::string report;
};

// Audits the pair (center, center + h) under the configured bias.
inline AuditRun RunAudit(const ExperimentConfig& config, std::optional<double> x_i = std::nullopt,
                         std::optional<double> x_j = std::nullopt, std::uint64_t window = audit::kDefaultWindow) {
  config.Validate();
  const Dataset data{{}, config.input ? (*config.feasible_min + *config.feasible_max) / 2.0 : config.center,
                     config.input ? (*config.feasible_max - *config.feasible_min) / 2.0 : config.half_range};
  const MechanismParams params = ParamsFor(config, config.epsilons.front(), data);
  const double a = x_i.value_or(params.center);
  const double b = x_j.value_or(params.center + params.half_range);
  AuditRun run;
  run.verdict = audit::FindWitness(params, a, b, window);
  std::ostringstream out;
  out << "epsilon = " << text::FormatDouble(params.epsilon) << "\n"
      << "center = " << text::FormatDouble(params.center) << "\n"
      << "half_range = " << text::FormatDouble(params.half_range) << "\n"
      << "abar = " << fpbits::ToHex(params.bias) << "\n"
      << "x_i = " << text::FormatDouble(a) << "\n"
      << "x_j = " << text::FormatDouble(b) << "\n"
      << "window = " << window << "\n"
      << audit::FormatReport(run.verdict);
  run.report = out.str();
  return run;
}

}  // namespace zeal
