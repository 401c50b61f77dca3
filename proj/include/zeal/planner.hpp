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

// Choosing the bias A-bar.
//
// A planned bias moves the whole output support into one binade
// [2^E, 2^(E+1)), with out_max two ULPs below the top. That shares the sign
// and exponent bits of every output, plus a run of leading mantissa ones that
// grows one-for-one with E. The cost is rounding: once ULP(A-bar) is
// comparable to |center -+ C| the bias starts eating the signal, which the
// finite-precision estimate tracks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

#include "zeal/error.hpp"
#include "zeal/fpbits.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/text.hpp"

namespace zeal {

inline constexpr double kDefaultMaxFiniteError = 1e-6;
inline constexpr int kMaxPlanExponent = 1022;

struct FiniteErrorEstimate {
  double delta_min = 0.0;  // (center - C) - (out_min - bias)
  double delta_max = 0.0;  // (center + C) - (out_max - bias)
  std::optional<double> relative_min;
  std::optional<double> relative_max;
  std::optional<double> f;  // mean of the two relative errors

  // |f| when defined, otherwise the larger available endpoint error.
  double Magnitude() const {
    if (f) return std::fabs(*f);
    double m = 0.0;
    if (relative_min) m = std::max(m, std::fabs(*relative_min));
    if (relative_max) m = std::max(m, std::fabs(*relative_max));
    return m;
  }
};

struct AbarPlan {
  int exponent = 0;  // E_U*
  double abar = 0.0;
  int enclosing_exponent = 0;
  int vulnerability_exponent = 0;
  int gamma_min = 0;
  double transmission_ratio = 1.0;
  double f_estimate = 0.0;
  bool vulnerability_free = false;
  MechanismParams params;  // carries `abar` as its bias
};

inline int EnclosingExponent(const MechanismParams& params) {
  return fpbits::CeilLog2(2.0 * params.c);
}

inline int VulnerabilityExponent(const MechanismParams& params) {
  // ceil(-1 + log2(v)) == ceil(log2(v)) - 1 for integer shifts.
  const int slope_exponent = fpbits::CeilLog2(params.exp_epsilon / params.p) - 1;
  return std::max(slope_exponent, EnclosingExponent(params));
}

namespace internal {

inline void CheckExponent(const MechanismParams& params, int exponent) {
  if (exponent <= fpbits::kMinNormalExponent) {
    throw Error(ErrorCode::kExponentTooSmallForIeee,
                "exponent " + std::to_string(exponent) + " is not above -1022");
  }
  const int enclosing = EnclosingExponent(params);
  if (exponent < enclosing) {
    throw Error(ErrorCode::kExponentTooSmall, "exponent " + std::to_string(exponent) +
                                                  " below enclosing exponent " + std::to_string(enclosing));
  }
  if (exponent > kMaxPlanExponent) {
    throw Error(ErrorCode::kOverflowingBias, "exponent " + std::to_string(exponent) + " overflows binary64");
  }
}

}  // namespace internal

// Bias that puts out_max at 2^(E+1) - 2 ULP(2^E). The result is nudged by
// whole ULPs if rounding of the bias would otherwise push out_max past that
// target, and rejected if out_min falls out of the binade.
inline double AbarFor(const MechanismParams& params, int exponent) {
  internal::CheckExponent(params, exponent);
  const double region_ulp = std::ldexp(1.0, exponent - fpbits::kMantissaBits);
  const double target = std::ldexp(1.0, exponent + 1) - 2.0 * region_ulp;
  double abar = target - params.max_unbiased;
  for (int i = 0; i < 64 && params.max_unbiased + abar > target; ++i) {
    abar = std::nextafter(abar, -HUGE_VAL);
  }
  const double lo = params.min_unbiased + abar;
  const double hi = params.max_unbiased + abar;
  if (!(lo >= std::ldexp(1.0, exponent)) || !(hi < std::ldexp(1.0, exponent + 1))) {
    throw Error(ErrorCode::kExponentTooSmall,
                "output range does not fit in binade 2^" + std::to_string(exponent));
  }
  return abar;
}

inline int GammaMin(const MechanismParams& params, int exponent) {
  internal::CheckExponent(params, exponent);
  const double region_ulp = std::ldexp(1.0, exponent - fpbits::kMantissaBits);
  const int changing = fpbits::CeilLog2(2.0 * params.c + 3.0 * region_ulp);
  const int gamma = 1 + fpbits::kExponentBits + exponent - changing;
  return std::clamp(gamma, 0, 64);
}

inline double TransmissionRatio(int gamma_min) { return 1.0 - static_cast<double>(gamma_min) / 64.0; }

// Replays the bias addition and removal on the two support endpoints in
// native arithmetic, in the same order the mechanism uses.
inline FiniteErrorEstimate EstimateFiniteError(const MechanismParams& params) {
  FiniteErrorEstimate e;
  const double biased_min = params.min_unbiased + params.bias;
  const double biased_max = params.max_unbiased + params.bias;
  e.delta_min = params.min_unbiased - (biased_min - params.bias);
  e.delta_max = params.max_unbiased - (biased_max - params.bias);
  if (params.min_unbiased != 0.0) e.relative_min = e.delta_min / params.min_unbiased;
  if (params.max_unbiased != 0.0) e.relative_max = e.delta_max / params.max_unbiased;
  if (e.relative_min && e.relative_max) e.f = (*e.relative_min + *e.relative_max) / 2.0;
  return e;
}

inline double FinitePrecisionEstimate(const MechanismParams& params) {
  const FiniteErrorEstimate e = EstimateFiniteError(params);
  if (!e.f) {
    throw Error(ErrorCode::kZeroDenominator, "center - C or center + C is zero; use the per-endpoint estimate");
  }
  return *e.f;
}

// Plan at a fixed exponent. gamma_min is the closed-form count, capped by the
// prefix the two rounded support endpoints actually share.
inline AbarPlan PlanAt(const MechanismParams& params, int exponent) {
  AbarPlan plan;
  plan.exponent = exponent;
  plan.abar = AbarFor(params, exponent);
  plan.params = WithBias(params, plan.abar);
  plan.enclosing_exponent = EnclosingExponent(params);
  plan.vulnerability_exponent = VulnerabilityExponent(params);
  plan.gamma_min = std::min(GammaMin(params, exponent),
                            fpbits::CommonPrefixLength(plan.params.out_min, plan.params.out_max));
  plan.transmission_ratio = TransmissionRatio(plan.gamma_min);
  const FiniteErrorEstimate finite = EstimateFiniteError(plan.params);
  plan.f_estimate = finite.f.value_or(finite.Magnitude());
  plan.vulnerability_free = exponent >= plan.vulnerability_exponent;
  return plan;
}

// Without a target, walks up from the vulnerability exponent and keeps the
// last exponent of the unbroken run whose |F| stays within max_f.
inline AbarPlan Plan(const MechanismParams& params, std::optional<int> target_exponent = std::nullopt,
                     std::optional<double> max_f = std::nullopt) {
  const MechanismParams unbiased = params.bias == 0.0 ? params : WithBias(params, 0.0);
  if (target_exponent) return PlanAt(unbiased, *target_exponent);

  const double limit = max_f.value_or(kDefaultMaxFiniteError);
  int exponent = VulnerabilityExponent(unbiased);
  std::optional<AbarPlan> first;
  // The closed-form exponent can be one short when 2C is an exact power of
  // two; the next binade always fits.
  for (int attempt = 0; attempt < 2 && !first; ++attempt, ++exponent) {
    try {
      first = PlanAt(unbiased, exponent);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kExponentTooSmall) throw;
    }
  }
  if (!first) throw Error(ErrorCode::kNoFeasibleExponent, "no binade encloses the output range");
  if (EstimateFiniteError(first->params).Magnitude() > limit) {
    throw Error(ErrorCode::kNoFeasibleExponent,
                "finite-precision error exceeds the limit already at exponent " + std::to_string(first->exponent));
  }
  AbarPlan best = *first;
  for (int e = best.exponent + 1; e <= kMaxPlanExponent; ++e) {
    AbarPlan candidate;
    try {
      candidate = PlanAt(unbiased, e);
    } catch (const Error&) {
      break;
    }
    if (EstimateFiniteError(candidate.params).Magnitude() > limit) break;
    best = candidate;
  }
  return best;
}

inline std::string SerializePlan(const AbarPlan& plan) {
  std::ostringstream out;
  out << "epsilon = " << text::FormatDouble(plan.params.epsilon) << "\n"
      << "center = " << text::FormatDouble(plan.params.center) << "\n"
      << "half_range = " << text::FormatDouble(plan.params.half_range) << "\n"
      << "exponent = " << plan.exponent << "\n"
      << "abar = " << fpbits::ToHex(plan.abar) << "\n"
      << "gamma_min = " << plan.gamma_min << "\n";
  return out.str();
}

// Rebuilds a plan from its serialized form, using the recorded bias bit
// pattern verbatim and checking the recorded gamma_min.
inline AbarPlan ParsePlan(std::string_view body) {
  const auto kv = text::ParseKeyValue(body);
  auto field = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::kInvalidPlan, std::string("missing key ") + key);
    return it->second;
  };
  auto real = [&](const char* key) {
    const auto v = text::ParseDouble(field(key));
    if (!v) throw Error(ErrorCode::kInvalidPlan, std::string("bad number for ") + key);
    return *v;
  };
  auto integer = [&](const char* key) {
    const auto v = text::ParseInt(field(key));
    if (!v) throw Error(ErrorCode::kInvalidPlan, std::string("bad integer for ") + key);
    return static_cast<int>(*v);
  };
  const auto abar = text::ParseHexBits(field("abar"));
  if (!abar) throw Error(ErrorCode::kInvalidPlan, "abar must be a 0x-prefixed 16-digit bit pattern");
  const MechanismParams unbiased = DeriveParams(real("epsilon"), real("center"), real("half_range"));
  AbarPlan plan = PlanAt(unbiased, integer("exponent"));
  if (fpbits::ToBits(plan.abar) != fpbits::ToBits(*abar)) {
    plan.abar = *abar;
    plan.params = WithBias(unbiased, *abar);
    plan.gamma_min = std::min(GammaMin(unbiased, plan.exponent),
                              fpbits::CommonPrefixLength(plan.params.out_min, plan.params.out_max));
    plan.transmission_ratio = TransmissionRatio(plan.gamma_min);
    const FiniteErrorEstimate finite = EstimateFiniteError(plan.params);
    plan.f_estimate = finite.f.value_or(finite.Magnitude());
  }
  if (plan.gamma_min != integer("gamma_min")) {
    throw Error(ErrorCode::kInvalidPlan, "recorded gamma_min disagrees with the recomputed value");
  }
  return plan;
}

}  // namespace zeal
