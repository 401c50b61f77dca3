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

// Bit-level anatomy of IEEE-754 binary64 values.
//
// Every routine assumes round-to-nearest-even; RoundingIsNearestEven() is a
// cheap probe callers can assert on.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "zeal/error.hpp"

namespace zeal::fpbits {

inline constexpr int kExponentBias = 1023;
inline constexpr int kMantissaBits = 52;
inline constexpr int kExponentBits = 11;
inline constexpr int kMinNormalExponent = -1022;
inline constexpr std::uint64_t kSignMask = 0x8000000000000000ULL;
inline constexpr std::uint64_t kExponentMask = 0x7FF0000000000000ULL;
inline constexpr std::uint64_t kMantissaMask = 0x000FFFFFFFFFFFFFULL;

inline std::uint64_t ToBits(double x) { return std::bit_cast<std::uint64_t>(x); }
inline double FromBits(std::uint64_t bits) { return std::bit_cast<double>(bits); }

struct FloatAnatomy {
  std::uint32_t sign = 0;             // 1 bit
  std::uint32_t biased_exponent = 0;  // 11 bits
  std::uint64_t mantissa = 0;         // 52 bits
  int unbiased_exponent = 0;
  // Set for zero and subnormal inputs: the implicit leading bit is 0 and
  // unbiased_exponent is reported as -1022.
  bool subnormal = false;

  friend bool operator==(const FloatAnatomy&, const FloatAnatomy&) = default;
};

// 1.0 + 2^-53 must round back to 1.0 under round-to-nearest-even.
inline bool RoundingIsNearestEven() {
  volatile double one = 1.0;
  volatile double half_ulp = 0x1p-53;
  volatile double three_half_ulp = 0x1.8p-52;
  return one + half_ulp == 1.0 && one + three_half_ulp == 1.0 + 0x1p-51;
}

inline FloatAnatomy Decompose(double x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorCode::kNonFiniteInput, "cannot decompose a non-finite value");
  }
  const std::uint64_t bits = ToBits(x);
  FloatAnatomy out;
  out.sign = static_cast<std::uint32_t>(bits >> 63);
  out.biased_exponent = static_cast<std::uint32_t>((bits & kExponentMask) >> kMantissaBits);
  out.mantissa = bits & kMantissaMask;
  out.subnormal = out.biased_exponent == 0;
  out.unbiased_exponent = out.subnormal ? kMinNormalExponent
                                        : static_cast<int>(out.biased_exponent) - kExponentBias;
  return out;
}

inline double Recompose(const FloatAnatomy& a) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a.sign & 1u) << 63) |
                             (static_cast<std::uint64_t>(a.biased_exponent & 0x7FFu) << kMantissaBits) |
                             (a.mantissa & kMantissaMask);
  return FromBits(bits);
}

// Value reconstructed arithmetically as (-1)^sign * 2^E_U * (1 + M * 2^-52),
// independent of the bit-pattern route in Recompose().
inline double EvaluateAnatomy(const FloatAnatomy& a) {
  const double lead = a.subnormal ? 0.0 : 1.0;
  const double significand = lead + std::ldexp(static_cast<double>(a.mantissa), -kMantissaBits);
  const double magnitude = std::ldexp(significand, a.unbiased_exponent);
  return a.sign ? -magnitude : magnitude;
}

inline bool IsNormal(double x) { return std::isnormal(x); }

// Unit in the last place of the binade [2^E_U, 2^(E_U+1)) containing |x|.
// Exact powers of two get the ULP of the binade they open.
inline double Ulp(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteInput, "ulp of non-finite value");
  if (!std::isnormal(x)) throw Error(ErrorCode::kSubnormalInput, "ulp of zero or subnormal value");
  const FloatAnatomy a = Decompose(x);
  return std::ldexp(1.0, a.unbiased_exponent - kMantissaBits);
}

// Gap between |x| and the next larger representable magnitude. Defined for
// zero and subnormals too (the smallest subnormal step), which the auditor
// needs when an output span crosses zero.
inline double Spacing(double x) {
  const double m = std::fabs(x);
  return std::nextafter(m, std::numeric_limits<double>::infinity()) - m;
}

// E_U such that 2^E_U <= x < 2^(E_U+1).
inline int ExponentRegion(double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::kNonPositiveInput, "exponent region needs x > 0");
  if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteInput, "exponent region of non-finite value");
  if (!std::isnormal(x)) throw Error(ErrorCode::kSubnormalInput, "exponent region of subnormal value");
  return Decompose(x).unbiased_exponent;
}

// ceil(log2(x)) for positive normal x, by exponent extraction: exact at
// powers of two where floating log2 can land one off.
inline int CeilLog2(double x) {
  const FloatAnatomy a = Decompose(x);
  if (!(x > 0.0)) throw Error(ErrorCode::kNonPositiveInput, "ceil(log2) needs x > 0");
  if (a.subnormal) throw Error(ErrorCode::kSubnormalInput, "ceil(log2) of subnormal value");
  return a.unbiased_exponent + (a.mantissa != 0 ? 1 : 0);
}

struct SharedBitProfile {
  std::uint64_t shared_mask = 0;
  int shared_count = 0;
  int shared_prefix_len = 0;
};

// Bit positions identical across all elements. Mixed-sign inputs get the
// literal bitwise intersection.
inline SharedBitProfile SharedBits(std::span<const double> data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "shared bits of empty dataset");
  const std::uint64_t first = ToBits(data.front());
  std::uint64_t differ = 0;
  for (double v : data) differ |= ToBits(v) ^ first;
  SharedBitProfile out;
  out.shared_mask = ~differ;
  out.shared_count = std::popcount(out.shared_mask);
  out.shared_prefix_len = std::countl_one(out.shared_mask);
  return out;
}

// Length of the common most-significant-bit prefix of two patterns.
inline int CommonPrefixLength(double a, double b) {
  return std::countl_zero(ToBits(a) ^ ToBits(b));
}

// Order-preserving integer key: key(a) < key(b) iff a < b, and +0/-0 share
// key 0. Consecutive representable doubles have consecutive keys.
inline std::int64_t OrdinalKey(double x) {
  const std::uint64_t bits = ToBits(x);
  const auto magnitude = static_cast<std::int64_t>(bits & ~kSignMask);
  return (bits & kSignMask) ? -magnitude : magnitude;
}

inline double FromOrdinalKey(std::int64_t key) {
  if (key >= 0) return FromBits(static_cast<std::uint64_t>(key));
  return FromBits(static_cast<std::uint64_t>(-key) | kSignMask);
}

inline std::string ToHex(double x) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::uint64_t bits = ToBits(x);
  std::string out = "0x0000000000000000";
  for (int i = 17; i >= 2; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[bits & 0xF];
    bits >>= 4;
  }
  return out;
}

}  // namespace zeal::fpbits
