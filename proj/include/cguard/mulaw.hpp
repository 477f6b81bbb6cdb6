// cguard/mulaw.hpp
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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "cguard/waveform.hpp"

namespace cguard {

// 8-bit codes over 256 uniform bins of the continuous mu-law compander
//   F(x) = sign(x) * ln(1 + 255|x|) / ln(256),   F: [-1,1] -> [-1,1].
// This is the continuous-compander convention (not the G.711 segment
// approximation): encode bins F(x) uniformly, decode returns the amplitude
// of the bin's companded-domain center. Note decode(128), the code for
// silence, is the small positive level ~8.59e-5, not exactly 0.
using MuLawCode = std::uint8_t;

inline constexpr int kMuLawLevels = 256;

namespace detail {

inline double mulaw_compress(double x) {
  return std::copysign(std::log1p(255.0 * std::abs(x)) / std::log(256.0), x);
}

inline double mulaw_expand(double u) {
  return std::copysign((std::pow(256.0, std::abs(u)) - 1.0) / 255.0, u);
}

}  // namespace detail

// Out-of-range inputs clip to the extreme codes.
inline MuLawCode mulaw_encode(double x) {
  const double u = detail::mulaw_compress(std::clamp(x, -1.0, 1.0));
  const double bin = std::floor((u + 1.0) * 128.0);
  return static_cast<MuLawCode>(std::clamp(bin, 0.0, 255.0));
}

inline double mulaw_decode(MuLawCode code) {
  const double u = (static_cast<double>(code) + 0.5) / 128.0 - 1.0;
  return detail::mulaw_expand(u);
}

// The 256 decode levels, strictly increasing in code order.
inline const std::array<double, kMuLawLevels>& mulaw_decode_levels() {
  static const std::array<double, kMuLawLevels> levels = [] {
    std::array<double, kMuLawLevels> t{};
    for (int i = 0; i < kMuLawLevels; ++i) {
      t[i] = mulaw_decode(static_cast<MuLawCode>(i));
    }
    return t;
  }();
  return levels;
}

inline std::vector<double> mulaw_roundtrip(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = mulaw_decode(mulaw_encode(x[i]));
  }
  return out;
}

// Quantizes every sample to its mu-law decode level. Idempotent on
// waveforms that already sit on decode levels.
inline Waveform mulaw_roundtrip(const Waveform& w) {
  return {mulaw_roundtrip(std::span<const double>(w.samples)),
          w.sample_rate_hz};
}

}  // namespace cguard
