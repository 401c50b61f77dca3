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

// Biased piecewise perturbator.
//
// An input x in [center - half_range, center + half_range] is mapped to an
// output in [out_min, out_max] = [center - C + bias, center + C + bias] with a
// three-level density: p on the plateau [L(x), R(x)] and p / e^eps on the two
// flanks. The plateau slides with x while the support stays fixed, which is
// what makes the density ratio between any two inputs at most e^eps.
//
// Sampling is by inverse CDF, evaluated without the bias as
//
//   max(min(left_line(q), middle_line(q)), right_line(q))
//
// where each line is a single fused multiply-add:
//   left_line(q)   = (center - C) + q * e^eps / p          (anchored at q = 0)
//   middle_line(q) = L0(x) + (q - cdf(L)) / p
//   right_line(q)  = (center + C) - (q_top - q) * e^eps / p (anchored at q_top)
// and q_top is the largest double below 1. The bias is added once, last, so
// a biased output is exactly fl(unbiased output + bias): the distortion is
// the addition transform the finite-precision estimate models. In exact
// arithmetic this is the piecewise-linear inverse CDF. In floating point it
// is monotone in q, the flank lines do not depend on x, and both support
// endpoints are reachable from every input.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zeal/error.hpp"
#include "zeal/fpbits.hpp"
#include "zeal/random.hpp"

namespace zeal {

struct MechanismParams {
  double epsilon = 0.0;
  double center = 0.0;      // H-bar
  double half_range = 0.0;  // h
  double bias = 0.0;        // A-bar

  double exp_epsilon = 0.0;
  double exp_half_epsilon = 0.0;
  double p = 0.0;             // plateau density
  double p_flank = 0.0;       // p / e^eps
  double c = 0.0;             // output half-width
  double slope_flank = 0.0;   // e^eps / p, inverse-CDF slope on the flanks
  double slope_middle = 0.0;  // 1 / p, inverse-CDF slope on the plateau
  double mass_middle = 0.0;   // p * (C - h)

  double min_unbiased = 0.0;  // center - C
  double max_unbiased = 0.0;  // center + C
  double out_min = 0.0;       // (center - C) + bias
  double out_max = 0.0;       // (center + C) + bias
};

struct Breakpoints {
  double left = 0.0;
  double right = 0.0;
};

enum class DomainPolicy { kReject, kClamp };

struct PrivatizedDataset {
  std::vector<double> samples;
  MechanismParams params;

  std::size_t size() const { return samples.size(); }
};

inline constexpr double kLargestBelowOne = 0x1.fffffffffffffp-1;

inline MechanismParams DeriveParams(double epsilon, double center, double half_range, double bias = 0.0) {
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidEpsilon, "epsilon must be finite and positive");
  }
  if (!std::isfinite(center) || !std::isfinite(bias)) {
    throw Error(ErrorCode::kNonFiniteInput, "center and bias must be finite");
  }
  if (!std::isfinite(half_range) || !(half_range > 0.0)) {
    throw Error(ErrorCode::kInvalidRange, "half range must be finite and positive");
  }
  MechanismParams m;
  m.epsilon = epsilon;
  m.center = center;
  m.half_range = half_range;
  m.bias = bias;
  m.exp_epsilon = std::exp(epsilon);
  m.exp_half_epsilon = std::exp(epsilon / 2.0);
  // The plateau level is rebuilt from the flank level so the two stored
  // levels differ by exactly one multiplication by exp_epsilon.
  const double plateau = (m.exp_epsilon - m.exp_half_epsilon) / (2.0 * half_range * (m.exp_half_epsilon + 1.0));
  m.p_flank = plateau / m.exp_epsilon;
  m.p = m.p_flank * m.exp_epsilon;
  m.c = half_range * (m.exp_half_epsilon + 1.0) / (m.exp_half_epsilon - 1.0);
  m.slope_flank = m.exp_epsilon / m.p;
  m.slope_middle = 1.0 / m.p;
  m.mass_middle = m.p * (m.c - half_range);
  m.min_unbiased = center - m.c;
  m.max_unbiased = center + m.c;
  m.out_min = m.min_unbiased + bias;
  m.out_max = m.max_unbiased + bias;
  if (!std::isfinite(m.c) || !(m.c > half_range) || !std::isfinite(m.p) || !(m.p > 0.0) ||
      !std::isfinite(m.slope_flank)) {
    throw Error(ErrorCode::kInvalidEpsilon, "epsilon outside the numerically representable range");
  }
  if (!std::isfinite(m.out_min) || !std::isfinite(m.out_max)) {
    throw Error(ErrorCode::kOverflowingBias, "output bounds overflow");
  }
  return m;
}

inline MechanismParams WithBias(const MechanismParams& params, double bias) {
  return DeriveParams(params.epsilon, params.center, params.half_range, bias);
}

namespace internal {

// Inputs are accepted within a few ULP of the declared interval so that
// domains derived from (min + max) / 2 and (max - min) / 2 still admit the
// endpoints themselves.
inline double DomainSlack(const MechanismParams& m) {
  return 4.0 * fpbits::Spacing(std::max(std::fabs(m.center), m.half_range) + m.half_range);
}

// Normalized position z = (x - center) / h in [-1, 1].
inline double NormalizedInput(const MechanismParams& m, double x, DomainPolicy policy) {
  if (!std::isfinite(x)) throw Error(ErrorCode::kOutOfDomain, "input is not finite");
  const double lo = m.center - m.half_range;
  const double hi = m.center + m.half_range;
  const double slack = DomainSlack(m);
  if (policy == DomainPolicy::kReject && (x < lo - slack || x > hi + slack)) {
    throw Error(ErrorCode::kOutOfDomain, "input " + std::to_string(x) + " outside [" +
                                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return std::clamp((x - m.center) / m.half_range, -1.0, 1.0);
}

struct Segments {
  double left_unbiased = 0.0;
  double right_unbiased = 0.0;
  double left = 0.0;
  double right = 0.0;
  double mass_left = 0.0;         // cdf(L)
  double mass_left_middle = 0.0;  // cdf(R)
  double middle_intercept = 0.0;  // unbiased middle line at q = 0
};

inline Segments MakeSegments(const MechanismParams& m, double x, DomainPolicy policy) {
  const double z = NormalizedInput(m, x, policy);
  const double h = m.half_range;
  Segments s;
  // At the domain edges rounding can push a breakpoint one step outside the
  // support; it is pulled back so out_min <= L < R <= out_max holds exactly.
  s.left_unbiased = std::max((m.c + h) / 2.0 * z - (m.c - h) / 2.0 + m.center, m.min_unbiased);
  s.right_unbiased = std::min(s.left_unbiased + (m.c - h), m.max_unbiased);
  // The bias goes on last so the rounding it induces is the addition
  // transform applied to the unbiased breakpoints.
  s.left = std::max(s.left_unbiased + m.bias, m.out_min);
  s.right = std::min(s.right_unbiased + m.bias, m.out_max);
  s.mass_left = m.p_flank * (s.left_unbiased - m.min_unbiased);
  s.mass_left_middle = s.mass_left + m.mass_middle;
  s.middle_intercept = s.left_unbiased - s.mass_left * m.slope_middle;
  return s;
}

inline double UnbiasedInverseOnSegments(const MechanismParams& m, const Segments& s, double q) {
  const double left_line = std::fma(q, m.slope_flank, m.min_unbiased);
  const double middle_line = std::fma(q, m.slope_middle, s.middle_intercept);
  const double right_line = std::fma(-(kLargestBelowOne - q), m.slope_flank, m.max_unbiased);
  const double v = std::max(std::min(left_line, middle_line), right_line);
  return std::clamp(v, m.min_unbiased, m.max_unbiased);
}

inline double InverseCdfOnSegments(const MechanismParams& m, const Segments& s, double q) {
  return UnbiasedInverseOnSegments(m, s, q) + m.bias;
}

}  // namespace internal

inline Breakpoints ComputeBreakpoints(const MechanismParams& params, double x) {
  const internal::Segments s = internal::MakeSegments(params, x, DomainPolicy::kReject);
  return {s.left, s.right};
}

inline double Pdf(const MechanismParams& params, double x, double x_star) {
  const Breakpoints b = ComputeBreakpoints(params, x);
  if (!(x_star >= params.out_min && x_star <= params.out_max)) return 0.0;
  if (x_star >= b.left && x_star <= b.right) return params.p;
  return params.p_flank;
}

inline double Cdf(const MechanismParams& params, double x, double x_star) {
  const internal::Segments s = internal::MakeSegments(params, x, DomainPolicy::kReject);
  if (x_star <= params.out_min) return 0.0;
  if (x_star >= params.out_max) return 1.0;
  double q;
  if (x_star < s.left) {
    q = (x_star - params.out_min) * params.p_flank;
  } else if (x_star <= s.right) {
    q = s.mass_left + (x_star - s.left) * params.p;
  } else {
    q = s.mass_left_middle + (x_star - s.right) * params.p_flank;
  }
  return std::clamp(q, 0.0, 1.0);
}

inline double InverseCdf(const MechanismParams& params, double x, double q) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "cumulative probability must lie in [0, 1)");
  }
  return internal::InverseCdfOnSegments(params, internal::MakeSegments(params, x, DomainPolicy::kReject), q);
}

// Perturbs x using one uniform draw u in [0, 1).
inline double Perturb(const MechanismParams& params, double x, double u,
                      DomainPolicy policy = DomainPolicy::kReject) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "uniform draw must lie in [0, 1)");
  }
  return internal::InverseCdfOnSegments(params, internal::MakeSegments(params, x, policy), u);
}

template <typename UniformSource>
  requires std::invocable<UniformSource&> &&
           std::convertible_to<std::invoke_result_t<UniformSource&>, double>
double Perturb(const MechanismParams& params, double x, UniformSource& source,
               DomainPolicy policy = DomainPolicy::kReject) {
  return Perturb(params, x, static_cast<double>(source()), policy);
}

inline double AnalyticMean(const MechanismParams& params, double x) {
  internal::NormalizedInput(params, x, DomainPolicy::kReject);
  return x + params.bias;
}

inline double AnalyticVariance(const MechanismParams& params, double x) {
  const double z = internal::NormalizedInput(params, x, DomainPolicy::kReject);
  const double em1 = params.exp_half_epsilon - 1.0;
  const double h2 = params.half_range * params.half_range;
  return h2 * (z * z / em1 + (params.exp_half_epsilon + 3.0) / (3.0 * em1 * em1));
}

// Sample i uses the uniform CounterUniform(seed, stream)(i), so the output is
// independent of evaluation order.
inline PrivatizedDataset PerturbDataset(const MechanismParams& params, std::span<const double> data,
                                        std::uint64_t seed, std::uint64_t stream = 0,
                                        DomainPolicy policy = DomainPolicy::kReject) {
  const CounterUniform uniform(seed, stream);
  PrivatizedDataset out;
  out.params = params;
  out.samples.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      out.samples.push_back(Perturb(params, data[i], uniform(i), policy));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfDomain) throw;
      throw Error(ErrorCode::kOutOfDomain, "sample " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return out;
}

}  // namespace zeal
