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

// Reachability audit of the inverse-CDF sampler.
//
// The sampler maps a finite set of cumulative probabilities to a finite set
// of outputs. Where an output step is wider than the spacing of doubles, some
// representable outputs are never produced; if which ones depends on the
// input, an observer can rule inputs out, which breaks the density-ratio
// guarantee. Scanning every p_C is out of reach, so the auditor scans windows
// of consecutive p_C exhaustively at the places where steps are widest or the
// output grid is finest, and confirms every finding by binary search over the
// whole (monotone) sampler.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zeal/error.hpp"
#include "zeal/fpbits.hpp"
#include "zeal/mechanism.hpp"
#include "zeal/text.hpp"

namespace zeal::audit {

inline constexpr std::uint64_t kMaxWindow = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kDefaultWindow = std::uint64_t{1} << 16;
inline constexpr std::size_t kReportedHoles = 16;

enum class Segment { kLeftFlank, kMiddle, kRightFlank };

inline const char* SegmentName(Segment s) {
  switch (s) {
    case Segment::kLeftFlank: return "left-flank";
    case Segment::kMiddle: return "middle";
    case Segment::kRightFlank: return "right-flank";
  }
  return "?";
}

struct ReachabilityWindow {
  Segment segment = Segment::kMiddle;  // segment of the first p_C
  double pc_first = 0.0;
  double pc_last = 0.0;
  std::uint64_t count = 0;
  std::vector<double> image;         // distinct outputs, ascending
  std::uint64_t span_size = 0;       // representable doubles in [min, max] of image
  std::uint64_t hole_count = 0;      // span_size - image.size()
  std::vector<double> hole_samples;  // first few holes, ascending
};

struct Witness {
  double reaching_input = 0.0;
  double missing_input = 0.0;
  double output = 0.0;
};

struct WindowPair {
  double target = 0.0;
  ReachabilityWindow first;
  ReachabilityWindow second;
};

struct AuditVerdict {
  bool vulnerable = false;
  std::optional<Witness> witness;
  int windows_scanned = 0;
  std::vector<WindowPair> windows;
};

namespace internal {

inline double NextUp(double q) { return std::nextafter(q, 2.0); }
inline double NextDown(double q) { return std::nextafter(q, -1.0); }

inline Segment SegmentOf(const zeal::internal::Segments& s, double q) {
  if (q < s.mass_left) return Segment::kLeftFlank;
  if (q <= s.mass_left_middle) return Segment::kMiddle;
  return Segment::kRightFlank;
}

// Smallest gap between consecutive doubles anywhere in [lo, hi].
inline double MinSpacing(double lo, double hi) {
  if (lo <= 0.0 && hi >= 0.0) return fpbits::Spacing(0.0);
  return fpbits::Spacing(std::min(std::fabs(lo), std::fabs(hi)));
}

}  // namespace internal

// Local no-hole condition ULP(p_C) * slope <= ULP(x*) at the segment's worst
// case: the largest p_C spacing (2^-53, on [0.5, 1)) against the finest
// output spacing over the segment's output span.
inline bool SlopeCondition(const MechanismParams& params, double x, Segment segment) {
  const Breakpoints b = ComputeBreakpoints(params, x);
  double lo = params.out_min, hi = b.left, slope = params.slope_flank;
  if (segment == Segment::kMiddle) {
    lo = b.left;
    hi = b.right;
    slope = params.slope_middle;
  } else if (segment == Segment::kRightFlank) {
    lo = b.right;
    hi = params.out_max;
  }
  return slope * 0x1p-53 <= internal::MinSpacing(lo, hi);
}

// Exhaustive image of `count` consecutive representable p_C from pc_start.
// The window stops early if it reaches 1.
inline ReachabilityWindow ScanWindow(const MechanismParams& params, double x, double pc_start, std::uint64_t count) {
  if (!(pc_start >= 0.0 && pc_start < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "window start must lie in [0, 1)");
  }
  if (count == 0 || count > kMaxWindow) {
    throw Error(ErrorCode::kWindowTooLarge, "window size must be in [1, 2^20]");
  }
  const zeal::internal::Segments seg = zeal::internal::MakeSegments(params, x, DomainPolicy::kReject);
  ReachabilityWindow w;
  w.segment = internal::SegmentOf(seg, pc_start);
  w.pc_first = pc_start;
  std::vector<std::int64_t> keys;
  keys.reserve(count);
  double q = pc_start;
  for (std::uint64_t i = 0; i < count && q < 1.0; ++i, q = internal::NextUp(q)) {
    keys.push_back(fpbits::OrdinalKey(zeal::internal::InverseCdfOnSegments(params, seg, q)));
    w.pc_last = q;
    ++w.count;
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  w.image.reserve(keys.size());
  for (std::int64_t k : keys) w.image.push_back(fpbits::FromOrdinalKey(k));
  w.span_size = static_cast<std::uint64_t>(keys.back() - keys.front()) + 1;
  w.hole_count = w.span_size - keys.size();
  for (std::size_t i = 1; i < keys.size() && w.hole_samples.size() < kReportedHoles; ++i) {
    for (std::int64_t k = keys[i - 1] + 1; k < keys[i] && w.hole_samples.size() < kReportedHoles; ++k) {
      w.hole_samples.push_back(fpbits::FromOrdinalKey(k));
    }
  }
  return w;
}

// Smallest representable p_C in [0, 1) whose output is >= target, or the
// largest p_C below 1 if none is.
inline double FirstProbabilityAtLeast(const MechanismParams& params, double x, double target) {
  const zeal::internal::Segments seg = zeal::internal::MakeSegments(params, x, DomainPolicy::kReject);
  std::uint64_t lo = 0;
  std::uint64_t hi = fpbits::ToBits(kLargestBelowOne);
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (zeal::internal::InverseCdfOnSegments(params, seg, fpbits::FromBits(mid)) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return fpbits::FromBits(lo);
}

// Whether any representable p_C in [0, 1) maps x to `output`. Exact because
// the sampler is monotone non-decreasing in p_C.
inline bool IsReachable(const MechanismParams& params, double x, double output) {
  const double q = FirstProbabilityAtLeast(params, x, output);
  return InverseCdf(params, x, q) == output;
}

// Window of `count` p_C roughly centred on the first p_C that reaches target.
inline ReachabilityWindow ScanAround(const MechanismParams& params, double x, double target, std::uint64_t count) {
  double start = FirstProbabilityAtLeast(params, x, target);
  for (std::uint64_t i = 0; i < count / 2 && start > 0.0; ++i) start = internal::NextDown(start);
  if (start >= 1.0) start = kLargestBelowOne;
  return ScanWindow(params, x, start, count);
}

// Outputs where windows are placed: support endpoints, both inputs'
// breakpoints, the finest-grid point of the support and the outputs at
// p_C = 0.5 (where the p_C spacing doubles) and just below 1.
inline std::vector<double> AdversarialTargets(const MechanismParams& params, double x_i, double x_j) {
  std::vector<double> targets = {params.out_min, params.out_max};
  for (double x : {x_i, x_j}) {
    const Breakpoints b = ComputeBreakpoints(params, x);
    targets.push_back(b.left);
    targets.push_back(b.right);
    targets.push_back(InverseCdf(params, x, 0.5));
    targets.push_back(InverseCdf(params, x, kLargestBelowOne));
  }
  if (params.out_min <= 0.0 && params.out_max >= 0.0) {
    targets.push_back(0.0);
  } else {
    targets.push_back(std::fabs(params.out_min) < std::fabs(params.out_max) ? params.out_min : params.out_max);
  }
  std::sort(targets.begin(), targets.end(),
            [](double a, double b) { return fpbits::OrdinalKey(a) < fpbits::OrdinalKey(b); });
  targets.erase(std::unique(targets.begin(), targets.end(),
                            [](double a, double b) { return fpbits::OrdinalKey(a) == fpbits::OrdinalKey(b); }),
                targets.end());
  return targets;
}

namespace internal {

// First output of `from` inside [lo, hi] that `other` does not contain.
inline std::optional<double> FirstExclusive(const std::vector<double>& from, const std::vector<double>& other,
                                            double lo, double hi) {
  std::size_t j = 0;
  for (double v : from) {
    if (v < lo || v > hi) continue;
    while (j < other.size() && other[j] < v) ++j;
    if (j == other.size() || other[j] != v) return v;
  }
  return std::nullopt;
}

}  // namespace internal

// Scans matching windows for both inputs around each target and reports an
// output reachable from exactly one of them. Any candidate is confirmed over
// the full p_C range of the other input before it is reported.
inline AuditVerdict FindWitness(const MechanismParams& params, double x_i, double x_j,
                                const std::vector<double>& targets, std::uint64_t count = kDefaultWindow) {
  AuditVerdict verdict;
  for (double target : targets) {
    WindowPair pair;
    pair.target = target;
    pair.first = ScanAround(params, x_i, target, count);
    pair.second = ScanAround(params, x_j, target, count);
    verdict.windows_scanned += 2;
    if (fpbits::ToBits(x_i) != fpbits::ToBits(x_j) && !verdict.witness) {
      const double lo = std::max(pair.first.image.front(), pair.second.image.front());
      const double hi = std::min(pair.first.image.back(), pair.second.image.back());
      if (lo <= hi) {
        const auto only_i = internal::FirstExclusive(pair.first.image, pair.second.image, lo, hi);
        if (only_i && !IsReachable(params, x_j, *only_i)) verdict.witness = Witness{x_i, x_j, *only_i};
        if (!verdict.witness) {
          const auto only_j = internal::FirstExclusive(pair.second.image, pair.first.image, lo, hi);
          if (only_j && !IsReachable(params, x_i, *only_j)) verdict.witness = Witness{x_j, x_i, *only_j};
        }
      }
    }
    verdict.windows.push_back(std::move(pair));
  }
  verdict.vulnerable = verdict.witness.has_value();
  return verdict;
}

inline AuditVerdict FindWitness(const MechanismParams& params, double x_i, double x_j,
                                std::uint64_t count = kDefaultWindow) {
  return FindWitness(params, x_i, x_j, AdversarialTargets(params, x_i, x_j), count);
}

// Saturates at 2^64 - 1; a window straddling zero can miss most of the
// subnormal range on its own.
inline std::uint64_t TotalHoles(const AuditVerdict& v) {
  constexpr std::uint64_t kMax = ~std::uint64_t{0};
  std::uint64_t total = 0;
  for (const WindowPair& w : v.windows) {
    for (std::uint64_t h : {w.first.hole_count, w.second.hole_count}) total = h > kMax - total ? kMax : total + h;
  }
  return total;
}

inline std::string FormatReport(const AuditVerdict& v) {
  std::ostringstream out;
  out << "vulnerable = " << (v.vulnerable ? "true" : "false") << "\n"
      << "windows_scanned = " << v.windows_scanned << "\n"
      << "total_holes = " << TotalHoles(v) << "\n";
  if (v.witness) {
    out << "witness_reaching_input = " << text::FormatDouble(v.witness->reaching_input) << "\n"
        << "witness_missing_input = " << text::FormatDouble(v.witness->missing_input) << "\n"
        << "witness_output = " << text::FormatDouble(v.witness->output) << "\n"
        << "witness_output_bits = " << fpbits::ToHex(v.witness->output) << "\n";
  }
  for (const WindowPair& w : v.windows) {
    for (const ReachabilityWindow* r : {&w.first, &w.second}) {
      out << "window target=" << fpbits::ToHex(w.target) << " segment=" << SegmentName(r->segment)
          << " pc_first=" << fpbits::ToHex(r->pc_first) << " count=" << r->count
          << " image=" << r->image.size() << " holes=" << r->hole_count;
      if (!r->hole_samples.empty()) out << " first_hole=" << fpbits::ToHex(r->hole_samples.front());
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace zeal::audit
