// cguard/envelope.hpp
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
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cguard/fft.hpp"
#include "cguard/waveform.hpp"

namespace cguard {

// Amplitude-envelope extraction in three steps: magnitude (analytic signal
// or plain rectification), slot-wise peak hold, then a 2nd-order Butterworth
// lowpass. The whole pipeline is positively homogeneous of degree one:
// scaling the input scales the envelope by the same factor.

struct EnvelopeParams {
  std::size_t peak_window = 200;   // peak-hold slot length, samples
  double lpf_cutoff_hz = 300.0;    // smoothing cutoff
  bool use_hilbert = true;         // analytic magnitude vs rectification
  std::size_t context_pad = 400;   // pre-span context, samples
};

struct Envelope {
  std::vector<double> values;  // one per span sample, all >= 0
  EnvelopeParams params;
};

inline std::vector<double> rectify(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]);
  return out;
}

// Magnitude of the analytic signal, computed over a DFT of length
// next-power-of-two >= input length (zero padded) and truncated back.
// Spectrum weighting: DC and Nyquist kept, positive bins doubled,
// negative bins zeroed.
inline std::vector<double> analytic_magnitude(std::span<const double> x) {
  if (x.empty()) {
    throw std::invalid_argument("analytic_magnitude: empty input");
  }
  const std::size_t n = detail::next_pow2(x.size());
  std::vector<std::complex<double>> spec(n);
  for (std::size_t i = 0; i < x.size(); ++i) spec[i] = x[i];
  detail::fft_inplace(spec, false);
  for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
  detail::fft_inplace(spec, true);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(spec[i]);
  return out;
}

// Replaces each non-overlapping `window`-sample slot with the slot maximum.
// The final slot may be shorter and uses its own maximum. Output length
// equals input length.
inline std::vector<double> peak_hold(std::span<const double> x,
                                     std::size_t window) {
  if (window == 0) {
    throw std::invalid_argument("peak_hold: window must be nonzero");
  }
  std::vector<double> out(x.size());
  for (std::size_t s = 0; s < x.size(); s += window) {
    const std::size_t e = std::min(x.size(), s + window);
    double m = x[s];
    for (std::size_t i = s + 1; i < e; ++i) m = std::max(m, x[i]);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(s),
              out.begin() + static_cast<std::ptrdiff_t>(e), m);
  }
  return out;
}

struct BiquadCoeffs {
  double b0, b1, b2;  // feedforward
  double a1, a2;      // feedback (direct form I, unit a0)
};

// Bilinear-transform Butterworth lowpass with frequency prewarping.
// DC gain is exactly one by construction.
inline BiquadCoeffs design_lowpass_biquad(double cutoff_hz, double rate_hz) {
  if (!(rate_hz > 0.0)) {
    throw std::invalid_argument("lowpass: sample rate must be positive");
  }
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
    throw std::invalid_argument(
        "lowpass: cutoff must lie in (0, rate/2), got " +
        std::to_string(cutoff_hz) + " Hz at rate " + std::to_string(rate_hz));
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  BiquadCoeffs c;
  c.b0 = k2 * norm;
  c.b1 = 2.0 * k2 * norm;
  c.b2 = k2 * norm;
  c.a1 = 2.0 * (k2 - 1.0) * norm;
  c.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return c;
}

// Single causal forward pass from zero initial state.
inline std::vector<double> lowpass(std::span<const double> x,
                                   double cutoff_hz, double rate_hz) {
  const BiquadCoeffs c = design_lowpass_biquad(cutoff_hz, rate_hz);
  std::vector<double> y(x.size());
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yn =
        c.b0 * x[i] + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = yn;
    y[i] = yn;
  }
  return y;
}

// Envelope of w over `span`. The pipeline runs over the span plus
// context_pad preceding samples (zero-filled where the pad reaches before
// the waveform start) so the filters settle before the span begins; the pad
// outputs are dropped. Butterworth undershoot is clipped at zero, which
// keeps the result a valid envelope and commutes with positive scaling.
inline Envelope extract_envelope(const Waveform& w, SegmentSpec span,
                                 const EnvelopeParams& p) {
  if (span.length == 0) {
    throw std::invalid_argument("extract_envelope: empty span");
  }
  if (span.start + span.length > w.samples.size()) {
    throw std::invalid_argument(
        "extract_envelope: span [" + std::to_string(span.start) + ", " +
        std::to_string(span.start + span.length) + ") outside waveform of " +
        std::to_string(w.samples.size()) + " samples");
  }
  const std::size_t pad = p.context_pad;
  std::vector<double> buf(pad + span.length, 0.0);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const std::ptrdiff_t g = static_cast<std::ptrdiff_t>(span.start) -
                             static_cast<std::ptrdiff_t>(pad) +
                             static_cast<std::ptrdiff_t>(i);
    if (g >= 0) buf[i] = w.samples[static_cast<std::size_t>(g)];
  }

  const std::vector<double> mag =
      p.use_hilbert ? analytic_magnitude(buf) : rectify(buf);
  const std::vector<double> held = peak_hold(mag, p.peak_window);
  const std::vector<double> smoothed =
      lowpass(held, p.lpf_cutoff_hz, static_cast<double>(w.sample_rate_hz));

  Envelope env;
  env.params = p;
  env.values.assign(smoothed.begin() + static_cast<std::ptrdiff_t>(pad),
                    smoothed.end());
  for (double& v : env.values) v = std::max(v, 0.0);
  return env;
}

// Largest pointwise exceedance of the candidate envelope over the
// reference envelope. Negative when the candidate stays below the
// reference everywhere; quiet-but-valid segments are not penalized.
inline double envelope_excess(const Envelope& candidate,
                              const Envelope& reference) {
  if (candidate.values.size() != reference.values.size()) {
    throw std::invalid_argument(
        "envelope_excess: length mismatch (" +
        std::to_string(candidate.values.size()) + " vs " +
        std::to_string(reference.values.size()) + ")");
  }
  if (candidate.values.empty()) {
    throw std::invalid_argument("envelope_excess: empty envelopes");
  }
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidate.values.size(); ++i) {
    excess = std::max(excess, candidate.values[i] - reference.values[i]);
  }
  return excess;
}

}  // namespace cguard
