// cguard/lpc.hpp
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
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cguard/mulaw.hpp"
#include "cguard/waveform.hpp"

namespace cguard {

// Short-term linear prediction of a reference waveform. Coefficients use
// the positive-sum predictor convention
//   y_hat[n] = sum_{i=1..order} coeffs[i-1] * y[n-i],
// so an AR(1) process y[n] = 0.9 y[n-1] + e[n] yields coeffs[0] ~ 0.9.

struct LpcConfig {
  std::size_t order = 16;
  std::size_t frame_len = 512;
  std::size_t frame_shift = 128;
  double sigma2_floor = 1e-8;  // residual-variance floor

  void validate() const {
    if (order == 0) throw std::invalid_argument("lpc: order must be nonzero");
    if (frame_len <= order) {
      throw std::invalid_argument("lpc: frame_len must exceed order");
    }
    if (frame_shift == 0 || frame_shift > frame_len) {
      throw std::invalid_argument("lpc: frame_shift must be in [1, frame_len]");
    }
    if (!(sigma2_floor > 0.0)) {
      throw std::invalid_argument("lpc: sigma2_floor must be positive");
    }
  }
};

struct LpcFrame {
  std::vector<double> coeffs;    // order entries, a_1..a_order
  double residual_variance = 0;  // per sample, >= sigma2_floor
  std::size_t start = 0;         // first sample covered by the frame
  std::size_t length = 0;
};

struct LpcAnalysis {
  std::vector<LpcFrame> frames;
  LpcConfig config;
  std::size_t analyzed_length = 0;
  int sample_rate_hz = kDefaultSampleRateHz;
};

inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  }
  return w;
}

// Biased autocorrelation r[k] = sum_t x[t] * x[t+k], k = 0..max_lag.
inline std::vector<double> autocorrelate(std::span<const double> x,
                                         std::size_t max_lag) {
  if (x.empty()) {
    throw std::invalid_argument("autocorrelate: empty input");
  }
  if (max_lag >= x.size()) {
    throw std::invalid_argument("autocorrelate: max_lag " +
                                std::to_string(max_lag) +
                                " must be below input length " +
                                std::to_string(x.size()));
  }
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) acc += x[t] * x[t + k];
    r[k] = acc;
  }
  return r;
}

struct LpcSolution {
  std::vector<double> coeffs;
  // Final prediction-error power in the units of r[0]. Feed an
  // autocorrelation normalized per sample (r/N) to read this as a
  // per-sample residual variance; analyze_reference does that division.
  double residual_variance = 0.0;
};

// Levinson-Durbin recursion on the normal equations of r. Requires
// r[0] > 0; callers treat that failure as a degenerate frame. When the
// prediction error hits zero early (exactly predictable input), remaining
// coefficients stay zero.
inline LpcSolution levinson_durbin(std::span<const double> r,
                                   std::size_t order) {
  if (order == 0) {
    throw std::invalid_argument("levinson_durbin: order must be nonzero");
  }
  if (r.size() < order + 1) {
    throw std::invalid_argument(
        "levinson_durbin: need order+1 autocorrelation lags, got " +
        std::to_string(r.size()));
  }
  if (!(r[0] > 0.0)) {
    throw std::domain_error(
        "levinson_durbin: nonpositive zero-lag autocorrelation (degenerate "
        "frame)");
  }
  std::vector<double> a(order, 0.0);
  std::vector<double> prev(order, 0.0);
  double err = r[0];
  for (std::size_t m = 0; m < order; ++m) {
    if (!(err > 0.0)) {
      err = 0.0;
      break;
    }
    double acc = r[m + 1];
    for (std::size_t i = 0; i < m; ++i) acc -= a[i] * r[m - i];
    const double k = acc / err;
    std::copy(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(m),
              prev.begin());
    a[m] = k;
    for (std::size_t i = 0; i < m; ++i) a[i] = prev[i] - k * prev[m - 1 - i];
    err *= (1.0 - k * k);
  }
  return {std::move(a), std::max(err, 0.0)};
}

// Frame-wise LPC of a reference waveform. The reference is mu-law
// roundtripped first so the analysis sees exactly the quantized levels a
// code-by-code generator can produce. Frames start at k * frame_shift and
// are Hamming-windowed; a frame whose windowed power is at or below the
// variance floor is degenerate and maps to zero coefficients with
// residual_variance = sigma2_floor.
inline LpcAnalysis analyze_reference(const Waveform& ref,
                                     const LpcConfig& cfg = {}) {
  cfg.validate();
  if (ref.samples.size() < cfg.frame_len) {
    throw std::invalid_argument(
        "analyze_reference: reference of " +
        std::to_string(ref.samples.size()) +
        " samples is shorter than one frame (" +
        std::to_string(cfg.frame_len) + ")");
  }
  const Waveform coded = mulaw_roundtrip(ref);
  const std::vector<double> window = hamming_window(cfg.frame_len);
  const std::size_t n_frames =
      (coded.samples.size() - cfg.frame_len) / cfg.frame_shift + 1;

  LpcAnalysis out;
  out.config = cfg;
  out.analyzed_length = ref.samples.size();
  out.sample_rate_hz = ref.sample_rate_hz;
  out.frames.reserve(n_frames);

  std::vector<double> frame(cfg.frame_len);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::size_t start = k * cfg.frame_shift;
    for (std::size_t i = 0; i < cfg.frame_len; ++i) {
      frame[i] = coded.samples[start + i] * window[i];
    }
    const std::vector<double> r = autocorrelate(frame, cfg.order);

    LpcFrame f;
    f.start = start;
    f.length = cfg.frame_len;
    if (r[0] <= static_cast<double>(cfg.frame_len) * cfg.sigma2_floor) {
      f.coeffs.assign(cfg.order, 0.0);
      f.residual_variance = cfg.sigma2_floor;
    } else {
      LpcSolution sol = levinson_durbin(r, cfg.order);
      f.coeffs = std::move(sol.coeffs);
      f.residual_variance =
          std::max(sol.residual_variance / static_cast<double>(cfg.frame_len),
                   cfg.sigma2_floor);
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

// Frame whose center is nearest to sample n; ties resolve to the earlier
// frame, and positions beyond the last frame's coverage use the final frame.
inline const LpcFrame& frame_for_sample(const LpcAnalysis& a, std::size_t n) {
  if (a.frames.empty()) {
    throw std::invalid_argument("frame_for_sample: empty analysis");
  }
  const std::size_t half = a.config.frame_len / 2;
  const std::size_t shift = a.config.frame_shift;
  std::size_t k = 0;
  if (n > half) {
    const std::size_t q = (n - half) / shift;  // last center at or before n
    k = std::min(q, a.frames.size() - 1);
    if (q + 1 < a.frames.size()) {
      const std::size_t below = n - (q * shift + half);
      const std::size_t above = ((q + 1) * shift + half) - n;
      if (above < below) k = q + 1;
    }
  }
  return a.frames[k];
}

// One-step conditional mean under the frame's predictor. `history` holds
// the last `order` amplitudes, newest last. Clipped to the amplitude range.
inline double predict_mean(const LpcFrame& frame,
                           std::span<const double> history) {
  if (history.size() != frame.coeffs.size()) {
    throw std::invalid_argument(
        "predict_mean: history length " + std::to_string(history.size()) +
        " != predictor order " + std::to_string(frame.coeffs.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < frame.coeffs.size(); ++i) {
    acc += frame.coeffs[i] * history[history.size() - 1 - i];
  }
  return std::clamp(acc, -1.0, 1.0);
}

}  // namespace cguard
