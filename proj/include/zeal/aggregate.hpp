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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "zeal/error.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/text.hpp"

namespace zeal {

// Neumaier's variant of Kahan summation; order-dependent but deterministic.
class CompensatedSum {
 public:
  void Add(double value) {
    const double t = sum_ + value;
    if (std::fabs(sum_) >= std::fabs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double Value() const { return sum_ + compensation_; }

  // (sum_ + compensation_) / d with the exact remainder of the leading
  // quotient folded back in, so the mean of n copies of v is v.
  double DividedBy(double d) const {
    const double q = sum_ / d;
    const double r = std::fma(-q, d, sum_);
    return q + (r + compensation_) / d;
  }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double Sum(std::span<const double> values) {
  CompensatedSum s;
  for (double v : values) s.Add(v);
  return s.Value();
}

inline double Mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyDataset, "mean of empty dataset");
  CompensatedSum s;
  for (double v : values) s.Add(v);
  return s.DividedBy(static_cast<double>(values.size()));
}

// (1/n) * sum(x*) - bias. The bias is removed after the division, so the
// rounding of the biased samples themselves is what the result reflects.
inline double AvgStar(std::span<const double> samples, double bias) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyDataset, "AVG* of empty dataset");
  CompensatedSum s;
  for (double v : samples) s.Add(v);
  return s.DividedBy(static_cast<double>(samples.size())) - bias;
}

inline double AvgStar(const PrivatizedDataset& privatized) {
  return AvgStar(privatized.samples, privatized.params.bias);
}

struct BoundRow {
  double lambda = 0.0;
  double empirical_p = 0.0;
  double bound_abs = 0.0;
  double bound_rel = 0.0;
};

struct ErrorReport {
  double avg_star = 0.0;
  std::optional<double> avg_true;
  std::optional<double> delta_avg;      // AVG* - AVG
  std::optional<double> rel_delta_avg;  // (AVG* - AVG) / AVG, signed denominator
  std::optional<double> s_ds;           // sum of the original samples
  std::size_t n = 0;
  // Single-draw (x*_i - bias - x_i) / x_i; NaN where x_i == 0.
  std::vector<double> sample_relative_errors;
  std::vector<BoundRow> bounds;
};

inline ErrorReport ComputeErrorMetrics(const PrivatizedDataset& privatized, std::span<const double> original) {
  if (privatized.samples.size() != original.size()) {
    throw Error(ErrorCode::kLengthMismatch, "privatized and original datasets differ in length");
  }
  ErrorReport r;
  r.n = original.size();
  r.avg_star = AvgStar(privatized);
  r.s_ds = Sum(original);
  r.avg_true = *r.s_ds / static_cast<double>(r.n);
  r.delta_avg = r.avg_star - *r.avg_true;
  if (*r.avg_true != 0.0) r.rel_delta_avg = *r.delta_avg / *r.avg_true;
  r.sample_relative_errors.reserve(r.n);
  const double bias = privatized.params.bias;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double x = original[i];
    r.sample_relative_errors.push_back(x != 0.0 ? (privatized.samples[i] - bias - x) / x
                                                : std::numeric_limits<double>::quiet_NaN());
  }
  return r;
}

// Relative error of the estimated expected value of one input:
// (mean of `draws` perturbations - bias - x) / x.
inline double RelativeExpectedValueError(const MechanismParams& params, double x, std::size_t draws,
                                         std::uint64_t seed) {
  if (x == 0.0) throw Error(ErrorCode::kZeroTrueAverage, "relative error undefined for x = 0");
  if (draws == 0) throw Error(ErrorCode::kEmptyDataset, "need at least one draw");
  const CounterUniform uniform(seed, 0);
  CompensatedSum sum;
  for (std::size_t i = 0; i < draws; ++i) sum.Add(Perturb(params, x, uniform(i)));
  return (sum.DividedBy(static_cast<double>(draws)) - params.bias - x) / x;
}

inline double SumVariance(const MechanismParams& params, std::span<const double> data) {
  CompensatedSum s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      s.Add(AnalyticVariance(params, data[i]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kOutOfDomain, "sample " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return s.Value();
}

struct BernsteinValue {
  double raw = 1.0;     // may exceed 1 for tiny lambda
  double capped = 1.0;  // min(raw, 1)
};

namespace internal {

// exp(-(t^2 / 2) / (sum_var + (C + h) t / 3)) with t the threshold on |sum V_i|.
inline BernsteinValue Bernstein(const MechanismParams& params, double sum_var, double t) {
  BernsteinValue v;
  const double denom = sum_var + (params.c + params.half_range) * t / 3.0;
  v.raw = denom > 0.0 ? std::exp(-0.5 * t * t / denom) : 1.0;
  v.capped = std::min(v.raw, 1.0);
  return v;
}

inline void CheckLambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidProbability, "lambda must be finite and non-negative");
  }
}

}  // namespace internal

// Bound on P(|Delta_AVG| >= lambda). Depends on the bias-free constants only.
inline BernsteinValue BernsteinAbs(const MechanismParams& params, std::span<const double> data, double lambda) {
  internal::CheckLambda(lambda);
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "bound over empty dataset");
  const double n = static_cast<double>(data.size());
  return internal::Bernstein(params, SumVariance(params, data), n * lambda);
}

// Bound on P(|delta_AVG| >= lambda). |delta_AVG| >= lambda is the event
// |sum V_i| >= lambda * |S_DS|, so this equals BernsteinAbs at lambda * |AVG|.
inline BernsteinValue BernsteinRel(const MechanismParams& params, std::span<const double> data, double lambda) {
  internal::CheckLambda(lambda);
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "bound over empty dataset");
  const double s_ds = Sum(data);
  if (s_ds == 0.0) throw Error(ErrorCode::kZeroSum, "relative bound needs a nonzero dataset sum");
  return internal::Bernstein(params, SumVariance(params, data), std::fabs(s_ds) * lambda);
}

inline double BernsteinBoundAbs(const MechanismParams& params, std::span<const double> data, double lambda) {
  return BernsteinAbs(params, data, lambda).capped;
}

inline double BernsteinBoundRel(const MechanismParams& params, std::span<const double> data, double lambda) {
  return BernsteinRel(params, data, lambda).capped;
}

// `points` log-spaced values over [1e-3 (C + h), C + h].
inline std::vector<double> DefaultLambdaGrid(const MechanismParams& params, int points = 30) {
  const double top = params.c + params.half_range;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
    grid.push_back(top * std::pow(10.0, -3.0 * (1.0 - frac)));
  }
  return grid;
}

// Absolute error of the average for each trial; trial t draws from stream t.
inline std::vector<double> TrialAverageErrors(const MechanismParams& params, std::span<const double> data,
                                              int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::kConfigError, "trials must be at least 1");
  const double truth = Mean(data);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const PrivatizedDataset d = PerturbDataset(params, data, seed, static_cast<std::uint64_t>(t));
    out.push_back(AvgStar(d) - truth);
  }
  return out;
}

// Empirical frequency of |Delta_AVG| >= lambda over independent trials, next
// to the absolute bound. bound_rel is the relative-error bound evaluated with
// lambda read as a relative threshold.
inline std::vector<BoundRow> EmpiricalBoundCheck(const MechanismParams& params, std::span<const double> data,
                                                 std::span<const double> lambdas, int trials, std::uint64_t seed) {
  const std::vector<double> errors = TrialAverageErrors(params, data, trials, seed);
  const double sum_var = SumVariance(params, data);
  const double n = static_cast<double>(data.size());
  const double abs_sum = std::fabs(Sum(data));
  std::vector<BoundRow> rows;
  rows.reserve(lambdas.size());
  for (double lambda : lambdas) {
    internal::CheckLambda(lambda);
    BoundRow row;
    row.lambda = lambda;
    const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return std::fabs(e) >= lambda; });
    row.empirical_p = static_cast<double>(hits) / static_cast<double>(errors.size());
    row.bound_abs = internal::Bernstein(params, sum_var, n * lambda).capped;
    row.bound_rel = abs_sum > 0.0 ? internal::Bernstein(params, sum_var, abs_sum * lambda).capped : 1.0;
    rows.push_back(row);
  }
  return rows;
}

inline std::string BoundRowsCsv(std::span<const BoundRow> rows) {
  std::ostringstream out;
  out << "lambda,empirical_p,bound_abs,bound_rel\n";
  for (const BoundRow& r : rows) {
    out << text::FormatDouble(r.lambda) << ',' << text::FormatDouble(r.empirical_p) << ','
        << text::FormatDouble(r.bound_abs) << ',' << text::FormatDouble(r.bound_rel) << '\n';
  }
  return out.str();
}

}  // namespace zeal
