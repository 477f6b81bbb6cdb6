// cguard/detector.hpp
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
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cguard/envelope.hpp"
#include "cguard/generator.hpp"
#include "cguard/waveform.hpp"

namespace cguard {

// Segment-wise collapse detection (candidate envelope vs reference
// envelope), the max-power baseline statistic, DET/EER evaluation, and a
// synthetic labeled corpus for calibration.

struct SegmentVerdict {
  SegmentSpec segment;
  double statistic = 0.0;
  bool flagged = false;  // statistic > threshold
  double threshold = 0.0;
};

struct DetectionReport {
  std::vector<SegmentVerdict> verdicts;
  bool utterance_flagged = false;  // any segment flagged
};

// Envelope-excess detection over non-overlapping seg_len segments.
// Candidate and reference must have equal length and rate.
inline DetectionReport detect(const Waveform& candidate,
                              const Waveform& reference, std::size_t seg_len,
                              const EnvelopeParams& params, double threshold) {
  if (candidate.samples.size() != reference.samples.size()) {
    throw std::invalid_argument(
        "detect: length mismatch (" +
        std::to_string(candidate.samples.size()) + " vs " +
        std::to_string(reference.samples.size()) + ")");
  }
  if (candidate.sample_rate_hz != reference.sample_rate_hz) {
    throw std::invalid_argument(
        "detect: sample-rate mismatch (" +
        std::to_string(candidate.sample_rate_hz) + " vs " +
        std::to_string(reference.sample_rate_hz) + ")");
  }
  DetectionReport report;
  for (const SegmentSpec seg : segments_of(candidate, seg_len)) {
    const double stat =
        envelope_excess(extract_envelope(candidate, seg, params),
                        extract_envelope(reference, seg, params));
    report.verdicts.push_back({seg, stat, stat > threshold, threshold});
    report.utterance_flagged |= stat > threshold;
  }
  return report;
}

namespace detail {

inline double max_frame_power(std::span<const double> x,
                              std::size_t frame_len, std::size_t frame_shift) {
  if (x.empty()) return 0.0;
  if (x.size() < frame_len) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc / static_cast<double>(x.size());
  }
  double best = 0.0;
  for (std::size_t start = 0; start + frame_len <= x.size();
       start += frame_shift) {
    double acc = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) {
      acc += x[start + i] * x[start + i];
    }
    best = std::max(best, acc / static_cast<double>(frame_len));
  }
  return best;
}

}  // namespace detail

// Baseline statistic: difference of the maximum per-frame mean-square
// powers of candidate and reference (512/128 framing by default). Blind to
// faults that never outpower the loudest clean frame.
inline double max_pow_statistic(const Waveform& candidate,
                                const Waveform& reference,
                                std::size_t frame_len = 512,
                                std::size_t frame_shift = 128) {
  if (candidate.samples.size() != reference.samples.size()) {
    throw std::invalid_argument("max_pow_statistic: length mismatch");
  }
  if (frame_len == 0 || frame_shift == 0) {
    throw std::invalid_argument("max_pow_statistic: zero frame geometry");
  }
  return detail::max_frame_power(candidate.samples, frame_len, frame_shift) -
         detail::max_frame_power(reference.samples, frame_len, frame_shift);
}

struct LabeledRegion {
  SegmentSpec span;
  CollapseKind kind = CollapseKind::TypeI;
};

struct UtteranceTruth {
  bool collapsed = false;
  std::vector<LabeledRegion> regions;  // empty when clean
};

struct LabeledPair {
  Waveform candidate;
  Waveform reference;
  UtteranceTruth truth;
};

enum class SegmentLabel { Clean, TypeI, TypeII };

// Ground-truth label per seg_len segment: a segment is collapsed when its
// overlap with an injected region exceeds min(10% of the region, 200
// samples). With several qualifying regions the largest overlap wins.
inline std::vector<SegmentLabel> label_segments(
    std::size_t total_len, std::size_t seg_len,
    std::span<const LabeledRegion> regions) {
  std::vector<SegmentLabel> labels;
  for (const SegmentSpec seg : segments_of(total_len, seg_len)) {
    SegmentLabel label = SegmentLabel::Clean;
    std::size_t best_overlap = 0;
    for (const LabeledRegion& region : regions) {
      const std::size_t lo = std::max(seg.start, region.span.start);
      const std::size_t hi = std::min(seg.end(), region.span.end());
      const std::size_t overlap = hi > lo ? hi - lo : 0;
      const double rule =
          std::min(0.1 * static_cast<double>(region.span.length), 200.0);
      if (static_cast<double>(overlap) > rule && overlap > best_overlap) {
        best_overlap = overlap;
        label = region.kind == CollapseKind::TypeI ? SegmentLabel::TypeI
                                                   : SegmentLabel::TypeII;
      }
    }
    labels.push_back(label);
  }
  return labels;
}

struct DetPoint {
  double threshold = 0.0;
  double fa_rate = 0.0;  // collapsed items not flagged
  double fr_rate = 0.0;  // clean items flagged
};

struct DetCurve {
  std::vector<DetPoint> points;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double eer_fa = 0.0;
  double eer_fr = 0.0;
};

struct ScoredItem {
  double statistic = 0.0;
  bool collapsed = false;
};

// Threshold sweep over a uniform grid spanning the observed statistic
// range. An item is flagged when statistic > threshold; fa is the fraction
// of collapsed items not flagged, fr the fraction of clean items flagged.
// The EER is read at the grid point minimizing |fa - fr| and reported as
// the mean of the two rates there.
inline DetCurve det_sweep(std::span<const ScoredItem> items,
                          std::size_t grid_points = 200) {
  if (grid_points < 2) {
    throw std::invalid_argument("det_sweep: need at least two grid points");
  }
  std::vector<double> collapsed, clean;
  for (const ScoredItem& item : items) {
    (item.collapsed ? collapsed : clean).push_back(item.statistic);
  }
  if (collapsed.empty() || clean.empty()) {
    throw std::invalid_argument(
        "det_sweep: corpus must contain both collapsed and clean items (got " +
        std::to_string(collapsed.size()) + " collapsed, " +
        std::to_string(clean.size()) + " clean)");
  }
  std::sort(collapsed.begin(), collapsed.end());
  std::sort(clean.begin(), clean.end());

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const ScoredItem& item : items) {
    lo = std::min(lo, item.statistic);
    hi = std::max(hi, item.statistic);
  }

  DetCurve curve;
  curve.points.reserve(grid_points);
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t =
        lo + (hi - lo) * static_cast<double>(i) /
                 static_cast<double>(grid_points - 1);
    // flagged <=> statistic > t, so "not flagged" counts stats <= t
    const auto not_flagged = [t](const std::vector<double>& v) {
      return static_cast<double>(
          std::upper_bound(v.begin(), v.end(), t) - v.begin());
    };
    const double fa = not_flagged(collapsed) /
                      static_cast<double>(collapsed.size());
    const double fr = (static_cast<double>(clean.size()) -
                       not_flagged(clean)) /
                      static_cast<double>(clean.size());
    curve.points.push_back({t, fa, fr});
    const double gap = std::abs(fa - fr);
    if (gap < best_gap) {
      best_gap = gap;
      curve.eer = 0.5 * (fa + fr);
      curve.eer_threshold = t;
      curve.eer_fa = fa;
      curve.eer_fr = fr;
    }
  }
  return curve;
}

enum class EvalLevel { Segment, Utterance };
enum class StatKind { Env, MaxPow };
enum class KindFilter { All, TypeI, TypeII };

namespace detail {

inline bool kind_selected(CollapseKind kind, KindFilter filter) {
  switch (filter) {
    case KindFilter::All:
      return true;
    case KindFilter::TypeI:
      return kind == CollapseKind::TypeI;
    case KindFilter::TypeII:
      return kind == CollapseKind::TypeII;
  }
  return false;
}

inline bool utterance_selected(const UtteranceTruth& truth,
                               KindFilter filter) {
  if (!truth.collapsed) return true;  // clean utterances always count
  for (const LabeledRegion& r : truth.regions) {
    if (kind_selected(r.kind, filter)) return true;
  }
  return false;
}

}  // namespace detail

// Scores one labeled pair into DET items. Segment level produces one item
// per segment (segments labeled with the unselected collapse kind are
// dropped); utterance level produces at most one item (utterances collapsed
// only with the unselected kind are dropped). The MaxPow statistic at
// segment level restricts the frame scan to the segment.
inline std::vector<ScoredItem> score_pair(const LabeledPair& pair,
                                          StatKind stat, EvalLevel level,
                                          KindFilter filter,
                                          std::size_t seg_len,
                                          const EnvelopeParams& params) {
  if (pair.candidate.samples.size() != pair.reference.samples.size()) {
    throw std::invalid_argument("score_pair: length mismatch");
  }
  std::vector<ScoredItem> items;
  const std::size_t len = pair.candidate.samples.size();

  if (level == EvalLevel::Utterance) {
    if (!detail::utterance_selected(pair.truth, filter)) return items;
    double value = 0.0;
    if (stat == StatKind::MaxPow) {
      value = max_pow_statistic(pair.candidate, pair.reference);
    } else {
      value = -std::numeric_limits<double>::infinity();
      for (const SegmentSpec seg : segments_of(len, seg_len)) {
        value = std::max(
            value,
            envelope_excess(extract_envelope(pair.candidate, seg, params),
                            extract_envelope(pair.reference, seg, params)));
      }
    }
    items.push_back({value, pair.truth.collapsed});
    return items;
  }

  const std::vector<SegmentLabel> labels =
      label_segments(len, seg_len, pair.truth.regions);
  const std::vector<SegmentSpec> segs = segments_of(len, seg_len);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const SegmentLabel label = labels[i];
    if (label == SegmentLabel::TypeI &&
        !detail::kind_selected(CollapseKind::TypeI, filter)) {
      continue;
    }
    if (label == SegmentLabel::TypeII &&
        !detail::kind_selected(CollapseKind::TypeII, filter)) {
      continue;
    }
    double value = 0.0;
    if (stat == StatKind::MaxPow) {
      const SegmentSpec seg = segs[i];
      value = detail::max_frame_power(
                  std::span<const double>(pair.candidate.samples)
                      .subspan(seg.start, seg.length),
                  512, 128) -
              detail::max_frame_power(
                  std::span<const double>(pair.reference.samples)
                      .subspan(seg.start, seg.length),
                  512, 128);
    } else {
      value =
          envelope_excess(extract_envelope(pair.candidate, segs[i], params),
                          extract_envelope(pair.reference, segs[i], params));
    }
    items.push_back({value, label != SegmentLabel::Clean});
  }
  return items;
}

// DET curve over a labeled corpus. `score` maps one pair to its DET items
// (zero, one, or one per segment). Errors out on a single-class corpus.
template <typename ScoreFn>
DetCurve evaluate_det(std::span<const LabeledPair> corpus, ScoreFn&& score,
                      std::size_t grid_points = 200) {
  std::vector<ScoredItem> items;
  for (const LabeledPair& pair : corpus) {
    const std::vector<ScoredItem> scored = score(pair);
    items.insert(items.end(), scored.begin(), scored.end());
  }
  return det_sweep(items, grid_points);
}

namespace detail {

// One synthetic reference: a seeded harmonic tone stack with slow
// amplitude modulation, a stochastic noise floor, and raised-cosine fades,
// peak-normalized with headroom for fault injection. The noise floor keeps
// linear-predictive residuals realistic: a noiseless tone makes the
// prediction mask pathologically confident, and constrained regeneration
// then degenerates into an unstable free run of the predictor.
inline Waveform synth_reference(Rng& rng, int rate_hz) {
  const double dur_s = rng.uniform(2.0, 4.0);
  const auto len = static_cast<std::size_t>(
      std::llround(dur_s * static_cast<double>(rate_hz)));
  const double f0 = rng.uniform(110.0, 280.0);
  const std::size_t harmonics = 3 + rng.below(4);
  std::vector<double> phase(harmonics), gain(harmonics);
  double power = 0.0;
  for (std::size_t h = 0; h < harmonics; ++h) {
    phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    gain[h] = std::pow(0.55, static_cast<double>(h));
    power += 0.5 * gain[h] * gain[h];
  }
  // -26 dB relative to the tone RMS.
  const double noise_sigma = 0.05 * std::sqrt(power);
  const double am_hz = rng.uniform(0.8, 3.0);
  const double am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto fade = static_cast<std::size_t>(0.15 * rate_hz);

  Waveform w;
  w.sample_rate_hz = rate_hz;
  w.samples.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) / static_cast<double>(rate_hz);
    double s = rng.normal(0.0, noise_sigma);
    for (std::size_t h = 0; h < harmonics; ++h) {
      s += gain[h] * std::sin(2.0 * std::numbers::pi * f0 *
                                  static_cast<double>(h + 1) * t +
                              phase[h]);
    }
    double env = 1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * am_hz * t +
                                       am_phase);
    if (n < fade) {
      env *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(fade));
    }
    if (n + fade >= len) {
      env *= 0.5 - 0.5 * std::cos(std::numbers::pi *
                                  static_cast<double>(len - 1 - n) /
                                  static_cast<double>(fade));
    }
    w.samples[n] = env * s;
  }
  const double peak = peak_amplitude(w);
  const double target = 0.25;
  if (peak > 0.0) {
    for (double& s : w.samples) s *= target / peak;
  }
  return w;
}

// One impulse per block no longer than the label-rule overlap bound, so
// every segment labeled collapsed contains at least one impulse.
inline std::size_t plan_impulse_count(std::size_t region_len) {
  const auto bound = static_cast<std::size_t>(
      std::min(0.1 * static_cast<double>(region_len), 200.0));
  return std::clamp<std::size_t>((region_len + bound - 1) / bound, 3, 20);
}

inline CollapsePlan synth_plan(Rng& rng, CollapseKind kind,
                               std::size_t total_len) {
  CollapsePlan plan;
  plan.kind = kind;
  std::size_t region_len =
      kind == CollapseKind::TypeI ? 3000 + rng.below(5001)    // 3000..8000
                                  : 1200 + rng.below(1201);   // 1200..2400
  region_len = std::min(region_len, total_len / 2);
  const std::size_t margin = total_len / 10;
  const std::size_t room = total_len - region_len - 2 * margin;
  plan.region = {margin + rng.below(room + 1), region_len};
  plan.amplitude_factor = rng.uniform(3.0, 3.6);
  if (kind == CollapseKind::TypeII) {
    plan.impulse_count = plan_impulse_count(region_len);
  }
  return plan;
}

// Deterministic collapse assignment: which utterances collapse, and with
// which kind (split evenly, odd remainder to TypeI).
inline std::vector<std::optional<CollapseKind>> corpus_kinds(
    std::size_t n_utts, double collapse_fraction, std::uint64_t seed) {
  const auto n_collapsed = static_cast<std::size_t>(
      std::llround(collapse_fraction * static_cast<double>(n_utts)));
  std::vector<std::size_t> order(n_utts);
  for (std::size_t i = 0; i < n_utts; ++i) order[i] = i;
  Rng assign_rng(split_seed(seed, 0xa551));
  for (std::size_t i = n_utts; i > 1; --i) {
    std::swap(order[i - 1], order[assign_rng.below(i)]);
  }
  std::vector<std::optional<CollapseKind>> kinds(n_utts);
  for (std::size_t j = 0; j < n_collapsed; ++j) {
    kinds[order[j]] = (j % 2 == 0) ? CollapseKind::TypeI
                                   : CollapseKind::TypeII;
  }
  return kinds;
}

// One corpus item, independent of all others given its index.
inline LabeledPair synth_pair(std::size_t index,
                              std::optional<CollapseKind> kind,
                              std::uint64_t seed, int sample_rate_hz) {
  const std::uint64_t sub = split_seed(seed, 1000 + index);
  Rng rng(sub);
  LabeledPair pair;
  pair.reference = synth_reference(rng, sample_rate_hz);
  std::optional<CollapsePlan> plan;
  if (kind.has_value()) {
    plan = synth_plan(rng, *kind, pair.reference.samples.size());
    pair.truth.collapsed = true;
    pair.truth.regions.push_back({plan->region, plan->kind});
  }
  pair.candidate =
      faulty_generate(pair.reference, plan, -30.0, split_seed(sub, 0xca9d));
  return pair;
}

}  // namespace detail

// Deterministic labeled corpus: n_utts harmonic references, a
// collapse_fraction of them with one injected fault each, collapse kinds
// split evenly (odd remainder to TypeI). Every utterance derives from its
// own sub-seed, so the corpus is reproducible item by item.
inline std::vector<LabeledPair> synth_corpus(std::size_t n_utts,
                                             double collapse_fraction,
                                             std::uint64_t seed,
                                             int sample_rate_hz = 22050) {
  if (!(collapse_fraction >= 0.0 && collapse_fraction <= 1.0)) {
    throw std::invalid_argument(
        "synth_corpus: collapse_fraction must lie in [0, 1]");
  }
  const std::vector<std::optional<CollapseKind>> kinds =
      detail::corpus_kinds(n_utts, collapse_fraction, seed);
  std::vector<LabeledPair> corpus(n_utts);
  for (std::size_t i = 0; i < n_utts; ++i) {
    corpus[i] = detail::synth_pair(i, kinds[i], seed, sample_rate_hz);
  }
  return corpus;
}

}  // namespace cguard
