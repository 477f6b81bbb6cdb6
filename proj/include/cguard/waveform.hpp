// cguard/waveform.hpp
//
// Copyright 2026  cguard authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cguard {

inline constexpr int kDefaultSampleRateHz = 22050;

// Mono waveform. Samples are amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRateHz;

  std::size_t size() const { return samples.size(); }
};

// Throws if the rate is not positive or any sample leaves [-1, 1].
// Pure transforms assume valid input; call this at I/O boundaries.
inline void validate_waveform(const Waveform& w) {
  if (w.sample_rate_hz <= 0) {
    throw std::invalid_argument("waveform: sample rate must be positive, got " +
                                std::to_string(w.sample_rate_hz));
  }
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double s = w.samples[i];
    if (!(s >= -1.0 && s <= 1.0)) {
      throw std::invalid_argument("waveform: sample " + std::to_string(i) +
                                  " = " + std::to_string(s) +
                                  " outside [-1, 1]");
    }
  }
}

// Half-open sample range [start, start + length).
struct SegmentSpec {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

// Tiles [0, total_len) into non-overlapping seg_len segments in order.
// The final segment may be shorter; total_len == 0 yields no segments.
inline std::vector<SegmentSpec> segments_of(std::size_t total_len,
                                            std::size_t seg_len) {
  if (seg_len == 0) {
    throw std::invalid_argument("segments_of: segment length must be nonzero");
  }
  std::vector<SegmentSpec> out;
  out.reserve(total_len / seg_len + 1);
  for (std::size_t start = 0; start < total_len; start += seg_len) {
    out.push_back({start, std::min(seg_len, total_len - start)});
  }
  return out;
}

inline std::vector<SegmentSpec> segments_of(const Waveform& w,
                                            std::size_t seg_len) {
  return segments_of(w.samples.size(), seg_len);
}

inline double peak_amplitude(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

inline double peak_amplitude(const Waveform& w) {
  return peak_amplitude(std::span<const double>(w.samples));
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double rms(const Waveform& w) {
  return rms(std::span<const double>(w.samples));
}

}  // namespace cguard
