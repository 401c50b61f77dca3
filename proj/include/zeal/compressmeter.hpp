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

// Compression-ratio measurement.
//
// The built-in compressor is a bit-plane surrogate for deduplicating
// compressors: the 64 x n bit matrix is transposed into 64 planes, and each
// plane is stored as constant, literal or run-length coded, whichever is
// smallest. It is sensitive to exactly what a planned bias creates (planes
// that never change) and not much else, so it reproduces trends, not the
// absolute ratios of any production compressor.
//
// Stream layout: LEB128 n, then for each plane from the sign bit down a tag
// byte followed by the plane body.
//   kConstZero / kConstOne: no body
//   kLiteral: ceil(n / 8) bytes, sample 0 in the top bit of byte 0
//   kRunLength: LEB128 run lengths, alternating, starting with a run of
//               zeros (possibly empty), summing to n

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "zeal/error.hpp"
#include "zeal/fpbits.hpp"

namespace zeal::compress {

enum PlaneTag : std::uint8_t { kConstZero = 0, kConstOne = 1, kLiteral = 2, kRunLength = 3 };

enum class Method { kSurrogate, kExternal };

inline const char* MethodName(Method m) { return m == Method::kSurrogate ? "surrogate" : "external"; }

struct CompressionReport {
  double cr_original = 0.0;
  double cr_privatized = 0.0;
  Method method = Method::kSurrogate;
  double improvement = 0.0;  // (cr_original - cr_privatized) / cr_original
};

namespace internal {

inline void PutVarint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t GetVarint(std::span<const std::uint8_t> in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= in.size()) throw Error(ErrorCode::kInvalidFrame, "truncated varint");
    const std::uint8_t b = in[pos++];
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
  }
  throw Error(ErrorCode::kInvalidFrame, "varint too long");
}

inline std::vector<std::uint8_t> EncodePlane(std::span<const std::uint64_t> bits, int plane) {
  const std::size_t n = bits.size();
  auto bit = [&](std::size_t i) { return static_cast<std::uint8_t>((bits[i] >> plane) & 1u); };
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) ones += bit(i);
  if (ones == 0) return {kConstZero};
  if (ones == n) return {kConstOne};

  std::vector<std::uint8_t> literal(1 + (n + 7) / 8, 0);
  literal[0] = kLiteral;
  for (std::size_t i = 0; i < n; ++i) {
    if (bit(i)) literal[1 + i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }

  std::vector<std::uint8_t> rle = {kRunLength};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (bit(i) == current) {
      ++run;
      continue;
    }
    PutVarint(rle, run);
    if (rle.size() >= literal.size()) return literal;
    current ^= 1u;
    run = 1;
  }
  PutVarint(rle, run);
  return rle.size() < literal.size() ? rle : literal;
}

}  // namespace internal

inline std::vector<std::uint8_t> SurrogateCompress(std::span<const double> data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "nothing to compress");
  std::vector<std::uint64_t> bits(data.size());
  std::transform(data.begin(), data.end(), bits.begin(), fpbits::ToBits);
  std::vector<std::uint8_t> out;
  internal::PutVarint(out, data.size());
  for (int plane = 63; plane >= 0; --plane) {
    const std::vector<std::uint8_t> body = internal::EncodePlane(bits, plane);
    out.insert(out.end(), body.begin(), body.end());
  }
  return out;
}

inline std::vector<double> SurrogateDecompress(std::span<const std::uint8_t> stream) {
  std::size_t pos = 0;
  const std::uint64_t n = internal::GetVarint(stream, pos);
  if (n == 0 || n > 8 * stream.size() * 64) throw Error(ErrorCode::kInvalidFrame, "implausible sample count");
  std::vector<std::uint64_t> bits(n, 0);
  for (int plane = 63; plane >= 0; --plane) {
    if (pos >= stream.size()) throw Error(ErrorCode::kInvalidFrame, "truncated plane");
    const std::uint64_t mask = std::uint64_t{1} << plane;
    switch (stream[pos++]) {
      case kConstZero:
        break;
      case kConstOne:
        for (auto& b : bits) b |= mask;
        break;
      case kLiteral: {
        const std::size_t bytes = (n + 7) / 8;
        if (stream.size() - pos < bytes) throw Error(ErrorCode::kInvalidFrame, "truncated literal plane");
        for (std::size_t i = 0; i < n; ++i) {
          if (stream[pos + i / 8] & (0x80u >> (i % 8))) bits[i] |= mask;
        }
        pos += bytes;
        break;
      }
      case kRunLength: {
        std::uint64_t i = 0;
        bool one = false;
        while (i < n) {
          const std::uint64_t run = internal::GetVarint(stream, pos);
          if (run > n - i) throw Error(ErrorCode::kInvalidFrame, "run overflows plane");
          if (one) {
            for (std::uint64_t k = i; k < i + run; ++k) bits[k] |= mask;
          }
          i += run;
          one = !one;
        }
        break;
      }
      default:
        throw Error(ErrorCode::kInvalidFrame, "unknown plane tag");
    }
  }
  std::vector<double> out(n);
  std::transform(bits.begin(), bits.end(), out.begin(), fpbits::FromBits);
  return out;
}

inline std::uint64_t SurrogateCompressedBits(std::span<const double> data) {
  return 8 * static_cast<std::uint64_t>(SurrogateCompress(data).size());
}

// Compressed bits over 64 n uncompressed bits.
inline double CompressionRatio(std::uint64_t compressed_bits, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "compression ratio of empty dataset");
  return static_cast<double>(compressed_bits) / (64.0 * static_cast<double>(n));
}

inline double SurrogateRatio(std::span<const double> data) {
  return CompressionRatio(SurrogateCompressedBits(data), data.size());
}

// Runs `command` through the shell with the raw little-endian bytes of data
// on standard input and counts the bytes it writes to standard output.
inline std::uint64_t ExternalCompressedBits(std::span<const double> data, const std::string& command) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "nothing to compress");
  const char* tmpdir = std::getenv("TMPDIR");
  std::string path = std::string(tmpdir && *tmpdir ? tmpdir : "/tmp") + "/zeal-compress-XXXXXX";
  const int fd = mkstemp(path.data());
  if (fd < 0) throw Error(ErrorCode::kExternalCompressor, "cannot create temporary file");
  std::vector<std::uint8_t> raw;
  raw.reserve(8 * data.size());
  for (double x : data) {
    const std::uint64_t b = fpbits::ToBits(x);
    for (int k = 0; k < 8; ++k) raw.push_back(static_cast<std::uint8_t>(b >> (8 * k)));
  }
  std::size_t written = 0;
  while (written < raw.size()) {
    const ssize_t w = ::write(fd, raw.data() + written, raw.size() - written);
    if (w <= 0) break;
    written += static_cast<std::size_t>(w);
  }
  ::close(fd);
  if (written != raw.size()) {
    std::remove(path.c_str());
    throw Error(ErrorCode::kExternalCompressor, "cannot write temporary file");
  }
  FILE* pipe = ::popen((command + " < '" + path + "'").c_str(), "r");
  if (!pipe) {
    std::remove(path.c_str());
    throw Error(ErrorCode::kExternalCompressor, "cannot start '" + command + "'");
  }
  std::uint64_t bytes = 0;
  char buf[1 << 15];
  for (std::size_t got; (got = std::fread(buf, 1, sizeof(buf), pipe)) > 0;) bytes += got;
  const int status = ::pclose(pipe);
  std::remove(path.c_str());
  if (status != 0) throw Error(ErrorCode::kExternalCompressor, "'" + command + "' exited with failure");
  return 8 * bytes;
}

inline CompressionReport Measure(std::span<const double> original, std::span<const double> privatized) {
  CompressionReport r;
  r.cr_original = SurrogateRatio(original);
  r.cr_privatized = SurrogateRatio(privatized);
  r.improvement = (r.cr_original - r.cr_privatized) / r.cr_original;
  return r;
}

inline CompressionReport MeasureExternal(std::span<const double> original, std::span<const double> privatized,
                                         const std::string& command) {
  CompressionReport r;
  r.method = Method::kExternal;
  r.cr_original = CompressionRatio(ExternalCompressedBits(original, command), original.size());
  r.cr_privatized = CompressionRatio(ExternalCompressedBits(privatized, command), privatized.size());
  r.improvement = (r.cr_original - r.cr_privatized) / r.cr_original;
  return r;
}

}  // namespace zeal::compress
