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

#include "zeal/codec.hpp"

#include <cstdint>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"
#include "zeal/fpbits.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/planner.hpp"

namespace zeal::codec {
namespace {

AbarPlan RunningPlan() { return Plan(DeriveParams(1.0, 10.0, 5.0), 6); }

std::vector<double> Ramp(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

// Packs the low `width` bits of each pattern MSB first, one bit at a time.
std::vector<std::uint8_t> PackOracle(const std::vector<double>& samples, int width) {
  std::vector<bool> stream;
  for (double s : samples) {
    const std::uint64_t bits = fpbits::ToBits(s);
    for (int i = width - 1; i >= 0; --i) stream.push_back((bits >> i) & 1u);
  }
  std::vector<std::uint8_t> out((stream.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
  }
  return out;
}

TEST(CodecTest, SharedPrefixRunningExample) {
  const AbarPlan plan = RunningPlan();
  ASSERT_EQ(plan.gamma_min, 12);
  const SharedPrefix prefix = ComputeSharedPrefix(plan);
  EXPECT_EQ(prefix.length, 12);
  EXPECT_EQ(prefix.bits, 0x4050000000000000ULL);
  EXPECT_EQ(prefix.Mask(), 0xFFF0000000000000ULL);
  EXPECT_EQ(PayloadBitsPerSample(plan), 52);
}

TEST(CodecTest, SharedPrefixMatchesSupportEndpoints) {
  for (int e : {6, 10, 20, 37}) {
    const AbarPlan plan = Plan(DeriveParams(1.0, 10.0, 5.0), e);
    const SharedPrefix prefix = ComputeSharedPrefix(plan);
    EXPECT_EQ(fpbits::ToBits(plan.params.out_min) & prefix.Mask(), prefix.bits) << e;
    EXPECT_EQ(fpbits::ToBits(plan.params.out_max) & prefix.Mask(), prefix.bits) << e;
  }
}

TEST(CodecTest, SharedPrefixRejectsBadPlans) {
  AbarPlan plan = RunningPlan();
  plan.gamma_min = 65;
  EXPECT_ZEAL_ERROR(ComputeSharedPrefix(plan), ErrorCode::kInvalidPlan);
  plan = RunningPlan();
  plan.exponent = -1022;
  EXPECT_ZEAL_ERROR(ComputeSharedPrefix(plan), ErrorCode::kInvalidPlan);
}

TEST(CodecTest, PayloadSizeLaw) {
  EXPECT_EQ(PayloadBytes(0, 52), 0u);
  EXPECT_EQ(PayloadBytes(1, 52), 7u);
  EXPECT_EQ(PayloadBytes(2, 52), 13u);
  EXPECT_EQ(PayloadBytes(100000, 52), 650000u);
  EXPECT_EQ(PayloadBytes(3, 64), 24u);
}

TEST(CodecTest, RoundTripIsBitIdentical) {
  const AbarPlan plan = RunningPlan();
  const std::vector<double> data = Ramp(5.0, 15.0, 100000);
  const PrivatizedDataset p = PerturbDataset(plan.params, data, 17);
  const WireFrame frame = Encode(plan, p);
  EXPECT_EQ(frame.payload.size(), 650000u);
  const std::vector<std::uint8_t> bytes = ToBytes(frame);
  EXPECT_EQ(bytes.size(), kHeaderBytes + 650000u);
  const PrivatizedDataset back = Decode(FromBytes(bytes));
  ASSERT_EQ(back.samples.size(), p.samples.size());
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    ASSERT_EQ(fpbits::ToBits(back.samples[i]), fpbits::ToBits(p.samples[i])) << i;
  }
  EXPECT_EQ(fpbits::ToBits(back.params.bias), fpbits::ToBits(plan.abar));
  EXPECT_EQ(back.params.out_max, plan.params.out_max);
}

TEST(CodecTest, PayloadMatchesPackingOracle) {
  for (int e : {9, 13, 30}) {
    const AbarPlan plan = Plan(DeriveParams(0.5, 53.7, 30.2), e);
    const std::vector<double> data = Ramp(23.5, 83.9, 37);
    const PrivatizedDataset p = PerturbDataset(plan.params, data, 3);
    const WireFrame frame = Encode(plan, p);
    EXPECT_EQ(frame.payload, PackOracle(p.samples, PayloadBitsPerSample(plan)));
  }
}

TEST(CodecTest, HeaderLayout) {
  const AbarPlan plan = RunningPlan();
  const std::vector<double> samples = {plan.params.out_min, plan.params.out_max};
  const std::vector<std::uint8_t> bytes = ToBytes(Encode(plan, samples));
  ASSERT_EQ(bytes.size(), kHeaderBytes + 13u);
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 5),
            (std::vector<std::uint8_t>{'Z', 'E', 'A', 'L', 0x01}));
  // Epsilon 1.0 is 0x3ff0000000000000, big-endian.
  EXPECT_EQ(bytes[5], 0x3f);
  EXPECT_EQ(bytes[6], 0xf0);
  EXPECT_EQ(bytes[44], 6);    // low byte of the exponent
  EXPECT_EQ(bytes[52], 12);   // low byte of gamma_min
  EXPECT_EQ(bytes[60], 2);    // low byte of the count
  std::uint64_t abar = 0;
  for (int i = 29; i < 37; ++i) abar = (abar << 8) | bytes[i];
  EXPECT_EQ(abar, fpbits::ToBits(plan.abar));
}

TEST(CodecTest, EmptyDatasetIsHeaderOnly) {
  const AbarPlan plan = RunningPlan();
  const std::vector<std::uint8_t> bytes = ToBytes(Encode(plan, std::vector<double>{}));
  EXPECT_EQ(bytes.size(), kHeaderBytes);
  const PrivatizedDataset back = Decode(FromBytes(bytes));
  EXPECT_TRUE(back.samples.empty());
}

TEST(CodecTest, ArbitraryInPlanPatternsAreLossless) {
  const AbarPlan plan = Plan(DeriveParams(2.0, -7.0, 3.0));
  const SharedPrefix prefix = ComputeSharedPrefix(plan);
  std::mt19937_64 rng(5);
  std::vector<double> samples(4097);
  for (double& s : samples) s = fpbits::FromBits(prefix.bits | (rng() & ~prefix.Mask()));
  const PrivatizedDataset back = Decode(FromBytes(ToBytes(Encode(plan, samples))));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ASSERT_EQ(fpbits::ToBits(back.samples[i]), fpbits::ToBits(samples[i]));
  }
}

TEST(CodecTest, FlippedPayloadBitKeepsThePrefix) {
  const AbarPlan plan = RunningPlan();
  const PrivatizedDataset p = PerturbDataset(plan.params, Ramp(5.0, 15.0, 64), 9);
  std::vector<std::uint8_t> bytes = ToBytes(Encode(plan, p));
  bytes[kHeaderBytes + 20] ^= 0x10;
  const PrivatizedDataset back = Decode(FromBytes(bytes));
  const SharedPrefix prefix = ComputeSharedPrefix(plan);
  int changed = 0;
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    EXPECT_EQ(fpbits::ToBits(back.samples[i]) & prefix.Mask(), prefix.bits);
    changed += fpbits::ToBits(back.samples[i]) != fpbits::ToBits(p.samples[i]);
  }
  EXPECT_EQ(changed, 1);
}

TEST(CodecTest, SampleOutsidePlanReportsIndex) {
  const AbarPlan plan = RunningPlan();
  const std::vector<double> samples = {100.0, 101.0, 300.0, 102.0};
  try {
    Encode(plan, samples);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSampleOutsidePlan);
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(CodecTest, BiasMismatchIsRejected) {
  const AbarPlan plan = RunningPlan();
  const PrivatizedDataset p = PerturbDataset(Plan(DeriveParams(1.0, 10.0, 5.0), 7).params, Ramp(5, 15, 4), 1);
  EXPECT_ZEAL_ERROR(Encode(plan, p), ErrorCode::kInvalidPlan);
}

TEST(CodecTest, MalformedFramesAreRejected) {
  const AbarPlan plan = RunningPlan();
  const std::vector<std::uint8_t> good = ToBytes(Encode(plan, std::vector<double>{100.0, 101.0}));

  std::vector<std::uint8_t> bad = good;
  bad[0] = 'X';
  EXPECT_ZEAL_ERROR(FromBytes(bad), ErrorCode::kInvalidFrame);

  bad = good;
  bad[4] = 0x02;
  EXPECT_ZEAL_ERROR(FromBytes(bad), ErrorCode::kInvalidFrame);

  bad = good;
  bad[52] = 13;  // gamma_min no longer matches the recomputed value
  bad.pop_back();
  bad.pop_back();  // keep the payload length consistent with 51-bit samples
  EXPECT_ZEAL_ERROR(Decode(FromBytes(bad)), ErrorCode::kInvalidFrame);

  bad = good;
  bad[52] = 65;
  EXPECT_ZEAL_ERROR(FromBytes(bad), ErrorCode::kInvalidFrame);

  bad = good;
  bad.pop_back();
  EXPECT_ZEAL_ERROR(FromBytes(bad), ErrorCode::kInvalidFrame);

  bad = good;
  bad[59] = 0xff;  // absurd count
  EXPECT_ZEAL_ERROR(FromBytes(bad), ErrorCode::kInvalidFrame);

  EXPECT_ZEAL_ERROR(FromBytes(std::vector<std::uint8_t>(10, 0)), ErrorCode::kInvalidFrame);

  WireFrame frame = Encode(plan, std::vector<double>{100.0});
  frame.header.epsilon = -1.0;
  EXPECT_ZEAL_ERROR(Decode(frame), ErrorCode::kInvalidFrame);
  frame = Encode(plan, std::vector<double>{100.0});
  frame.header.exponent = 5000;
  EXPECT_ZEAL_ERROR(Decode(frame), ErrorCode::kInvalidFrame);
}

}  // namespace
}  // namespace zeal::codec
