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

// Truncated wire encoding. Under a planned bias every privatized sample
// starts with the same gamma_min bits, so a sensor sends only the remaining
// 64 - gamma_min bits and the collector re-attaches the known prefix. See
// docs/wire-format.md for the byte layout.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zeal/error.hpp"
#include "zeal/fpbits.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/planner.hpp"

namespace zeal::codec {

inline constexpr char kMagic[4] = {'Z', 'E', 'A', 'L'};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderBytes = 4 + 1 + 7 * 8;

struct SharedPrefix {
  std::uint64_t bits = 0;  // prefix left-aligned, remaining bits zero
  int length = 0;          // gamma_min

  std::uint64_t Mask() const { return length == 0 ? 0 : ~std::uint64_t{0} << (64 - length); }
};

struct FrameHeader {
  double epsilon = 0.0;
  double center = 0.0;
  double half_range = 0.0;
  double abar = 0.0;
  std::int64_t exponent = 0;
  std::int64_t gamma_min = 0;
  std::uint64_t count = 0;
};

struct WireFrame {
  FrameHeader header;
  std::vector<std::uint8_t> payload;
};

// Top gamma_min bits of any in-plan sample: sign 0, biased exponent E + 1023
// and then leading ones, the top bits of 2^(E+1) - 2 ULP(2^E).
inline SharedPrefix ComputeSharedPrefix(const AbarPlan& plan) {
  if (plan.gamma_min < 0 || plan.gamma_min > 64 || plan.exponent <= fpbits::kMinNormalExponent ||
      plan.exponent > kMaxPlanExponent) {
    throw Error(ErrorCode::kInvalidPlan, "plan exponent or gamma_min out of range");
  }
  SharedPrefix prefix;
  prefix.length = plan.gamma_min;
  const std::uint64_t biased = static_cast<std::uint64_t>(plan.exponent + fpbits::kExponentBias);
  const std::uint64_t top = (biased << fpbits::kMantissaBits) | (fpbits::kMantissaMask & ~std::uint64_t{1});
  prefix.bits = top & prefix.Mask();
  return prefix;
}

inline int PayloadBitsPerSample(const AbarPlan& plan) { return 64 - plan.gamma_min; }

inline std::size_t PayloadBytes(std::uint64_t count, int bits_per_sample) {
  return static_cast<std::size_t>((count * static_cast<std::uint64_t>(bits_per_sample) + 7) / 8);
}

namespace internal {

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  // Appends the low `width` bits of value, most significant first.
  void Write(std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i) {
      if (used_ == 0) out_.push_back(0);
      if ((value >> i) & 1u) out_.back() |= static_cast<std::uint8_t>(0x80u >> used_);
      used_ = (used_ + 1) & 7;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t Read(int width) {
    std::uint64_t value = 0;
    for (int i = 0; i < width; ++i, ++pos_) {
      value = (value << 1) | ((in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u);
    }
    return value;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline std::uint64_t GetU64(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[offset + i];
  return v;
}

}  // namespace internal

inline WireFrame Encode(const AbarPlan& plan, std::span<const double> samples) {
  const SharedPrefix prefix = ComputeSharedPrefix(plan);
  const int width = PayloadBitsPerSample(plan);
  const std::uint64_t low_mask = width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
  WireFrame frame;
  frame.header = {plan.params.epsilon, plan.params.center, plan.params.half_range, plan.abar,
                  plan.exponent, plan.gamma_min, samples.size()};
  frame.payload.reserve(PayloadBytes(samples.size(), width));
  internal::BitWriter writer(frame.payload);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint64_t bits = fpbits::ToBits(samples[i]);
    if ((bits & prefix.Mask()) != prefix.bits) {
      throw Error(ErrorCode::kSampleOutsidePlan,
                  "sample " + std::to_string(i) + " (" + fpbits::ToHex(samples[i]) + ") does not carry the plan prefix",
                  i);
    }
    writer.Write(bits & low_mask, width);
  }
  return frame;
}

inline WireFrame Encode(const AbarPlan& plan, const PrivatizedDataset& privatized) {
  if (fpbits::ToBits(privatized.params.bias) != fpbits::ToBits(plan.abar)) {
    throw Error(ErrorCode::kInvalidPlan, "dataset was privatized with a different bias than the plan");
  }
  return Encode(plan, privatized.samples);
}

// Rebuilds the plan a header describes and checks that its gamma_min agrees
// with the value recomputed from the other fields.
inline AbarPlan PlanFromHeader(const FrameHeader& h) {
  if (h.exponent <= fpbits::kMinNormalExponent || h.exponent > kMaxPlanExponent) {
    throw Error(ErrorCode::kInvalidFrame, "header exponent out of range");
  }
  AbarPlan plan;
  try {
    const MechanismParams unbiased = DeriveParams(h.epsilon, h.center, h.half_range);
    plan.exponent = static_cast<int>(h.exponent);
    plan.abar = h.abar;
    plan.params = WithBias(unbiased, h.abar);
    plan.enclosing_exponent = EnclosingExponent(unbiased);
    plan.vulnerability_exponent = VulnerabilityExponent(unbiased);
    plan.gamma_min = std::min(GammaMin(unbiased, plan.exponent),
                              fpbits::CommonPrefixLength(plan.params.out_min, plan.params.out_max));
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidFrame, std::string("header does not describe a valid plan: ") + e.what());
  }
  if (plan.gamma_min != h.gamma_min) {
    throw Error(ErrorCode::kInvalidFrame, "header gamma_min " + std::to_string(h.gamma_min) +
                                              " disagrees with recomputed " + std::to_string(plan.gamma_min));
  }
  plan.transmission_ratio = TransmissionRatio(plan.gamma_min);
  const FiniteErrorEstimate finite = EstimateFiniteError(plan.params);
  plan.f_estimate = finite.f.value_or(finite.Magnitude());
  plan.vulnerability_free = plan.exponent >= plan.vulnerability_exponent;
  return plan;
}

inline PrivatizedDataset Decode(const WireFrame& frame) {
  const AbarPlan plan = PlanFromHeader(frame.header);
  const SharedPrefix prefix = ComputeSharedPrefix(plan);
  const int width = PayloadBitsPerSample(plan);
  if (frame.payload.size() != PayloadBytes(frame.header.count, width)) {
    throw Error(ErrorCode::kInvalidFrame, "payload length does not match sample count");
  }
  PrivatizedDataset out;
  out.params = plan.params;
  out.samples.reserve(frame.header.count);
  internal::BitReader reader(frame.payload);
  for (std::uint64_t i = 0; i < frame.header.count; ++i) {
    out.samples.push_back(fpbits::FromBits(prefix.bits | reader.Read(width)));
  }
  return out;
}

inline std::vector<std::uint8_t> ToBytes(const WireFrame& frame) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kHeaderBytes + frame.payload.size());
  out.push_back(kVersion);
  const FrameHeader& h = frame.header;
  internal::PutU64(out, fpbits::ToBits(h.epsilon));
  internal::PutU64(out, fpbits::ToBits(h.center));
  internal::PutU64(out, fpbits::ToBits(h.half_range));
  internal::PutU64(out, fpbits::ToBits(h.abar));
  internal::PutU64(out, static_cast<std::uint64_t>(h.exponent));
  internal::PutU64(out, static_cast<std::uint64_t>(h.gamma_min));
  internal::PutU64(out, h.count);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

inline WireFrame FromBytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::kInvalidFrame, "frame shorter than its header");
  for (int i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) throw Error(ErrorCode::kInvalidFrame, "bad magic");
  }
  if (bytes[4] != kVersion) throw Error(ErrorCode::kInvalidFrame, "unsupported version");
  WireFrame frame;
  FrameHeader& h = frame.header;
  h.epsilon = fpbits::FromBits(internal::GetU64(bytes, 5));
  h.center = fpbits::FromBits(internal::GetU64(bytes, 13));
  h.half_range = fpbits::FromBits(internal::GetU64(bytes, 21));
  h.abar = fpbits::FromBits(internal::GetU64(bytes, 29));
  h.exponent = static_cast<std::int64_t>(internal::GetU64(bytes, 37));
  h.gamma_min = static_cast<std::int64_t>(internal::GetU64(bytes, 45));
  h.count = internal::GetU64(bytes, 53);
  if (h.gamma_min < 0 || h.gamma_min > 64) throw Error(ErrorCode::kInvalidFrame, "gamma_min out of range");
  if (h.count > 8 * bytes.size()) throw Error(ErrorCode::kInvalidFrame, "sample count exceeds payload");
  const std::size_t expected = PayloadBytes(h.count, 64 - static_cast<int>(h.gamma_min));
  if (bytes.size() - kHeaderBytes != expected) {
    throw Error(ErrorCode::kInvalidFrame, "payload length does not match sample count");
  }
  frame.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
  return frame;
}

}  // namespace zeal::codec
