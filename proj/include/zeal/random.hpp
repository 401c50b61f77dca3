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

#include <cstdint>

namespace zeal {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// 53-bit uniform in [0, 1) from the top bits of a 64-bit word.
constexpr double UniformFromBits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1p-53;
}

// Counter-based uniform source: the value for (seed, stream, index) is a pure
// function of the triple, so results do not depend on evaluation order,
// threading or platform.
class CounterUniform {
 public:
  constexpr CounterUniform(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(SplitMix64(SplitMix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL))) {}

  constexpr std::uint64_t Bits(std::uint64_t index) const {
    return SplitMix64(key_ ^ SplitMix64(index));
  }
  constexpr double operator()(std::uint64_t index) const { return UniformFromBits(Bits(index)); }

 private:
  std::uint64_t key_;
};

// Sequential adapter over CounterUniform for call sites that want a nullary
// generator.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream = 0) : source_(seed, stream) {}
  constexpr double operator()() { return source_(next_++); }

 private:
  CounterUniform source_;
  std::uint64_t next_ = 0;
};

}  // namespace zeal
