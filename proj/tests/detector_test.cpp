// tests/detector_test.cpp
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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cguard/detector.hpp"

using cguard::CollapseKind;
using cguard::LabeledRegion;
using cguard::ScoredItem;
using cguard::SegmentLabel;

TEST_CASE("detect does not flag an identical pair") {
  cguard::Waveform ref;
  ref.sample_rate_hz = 22050;
  ref.samples.resize(9000);
  for (std::size_t n = 0; n < ref.samples.size(); ++n) {
    ref.samples[n] = 0.3 * std::sin(0.06 * static_cast<double>(n));
  }
  const cguard::DetectionReport report =
      cguard::detect(ref, ref, 4000, {}, 0.08);
  REQUIRE(report.verdicts.size() == 3);
  CHECK_FALSE(report.utterance_flagged);
  for (const cguard::SegmentVerdict& v : report.verdicts) {
    CHECK_FALSE(v.flagged);
    CHECK(v.statistic <= 0.0);
    CHECK(v.threshold == 0.08);
  }
}

TEST_CASE("detect validates shape and rate") {
  cguard::Waveform a, b;
  a.samples.resize(100);
  b.samples.resize(90);
  CHECK_THROWS_AS(cguard::detect(a, b, 50, {}, 0.1), std::invalid_argument);
  b.samples.resize(100);
  b.sample_rate_hz = 16000;
  CHECK_THROWS_AS(cguard::detect(a, b, 50, {}, 0.1), std::invalid_argument);
}

TEST_CASE("max-power statistic sees level differences") {
  cguard::Waveform ref, cand;
  ref.samples.assign(4096, 0.0);
  cand.samples.assign(4096, 0.0);
  for (std::size_t i = 1000; i < 1600; ++i) cand.samples[i] = 0.5;
  const double stat = cguard::max_pow_statistic(cand, ref);
  CHECK_THAT(stat, Catch::Matchers::WithinAbs(0.25, 1e-12));
  CHECK(cguard::max_pow_statistic(ref, ref) == 0.0);
  cguard::Waveform longer;
  longer.samples.resize(5000);
  CHECK_THROWS_AS(cguard::max_pow_statistic(longer, ref),
                  std::invalid_argument);
}

TEST_CASE("short signals fall back to whole-signal power") {
  std::vector<double> x(100, 1.0);
  CHECK(cguard::detail::max_frame_power(x, 512, 128) == 1.0);
  CHECK(cguard::detail::max_frame_power(std::vector<double>{}, 512, 128) ==
        0.0);
}

TEST_CASE("segment labels require a meaningful overlap") {
  // Region of 2000: the rule is min(10% of region, 200) = 200 samples.
  const std::vector<LabeledRegion> at_boundary{
      {{3800, 2000}, CollapseKind::TypeI}};
  const auto labels = cguard::label_segments(12000, 4000, at_boundary);
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == SegmentLabel::Clean);  // overlap exactly 200: not above
  CHECK(labels[1] == SegmentLabel::TypeI);  // overlap 1800
  CHECK(labels[2] == SegmentLabel::Clean);
}

TEST_CASE("small regions use the 10 percent rule") {
  // Region of 400: the rule is min(40, 200) = 40 samples.
  const std::vector<LabeledRegion> straddling{
      {{3900, 400}, CollapseKind::TypeII}};
  const auto labels = cguard::label_segments(12000, 4000, straddling);
  CHECK(labels[0] == SegmentLabel::TypeII);  // overlap 100 > 40
  CHECK(labels[1] == SegmentLabel::TypeII);  // overlap 300 > 40
  CHECK(labels[2] == SegmentLabel::Clean);
}

TEST_CASE("the largest qualifying overlap decides the kind") {
  const std::vector<LabeledRegion> both{
      {{4000, 1000}, CollapseKind::TypeI},
      {{5500, 1500}, CollapseKind::TypeII},
  };
  const auto labels = cguard::label_segments(12000, 4000, both);
  CHECK(labels[1] == SegmentLabel::TypeII);
}

TEST_CASE("det sweep separates a cleanly split corpus") {
  std::vector<ScoredItem> items;
  for (int i = 0; i < 50; ++i) {
    items.push_back({1.0 + 0.01 * i, true});
    items.push_back({0.0 + 0.01 * i, false});
  }
  const cguard::DetCurve curve = cguard::det_sweep(items);
  CHECK(curve.eer == 0.0);
  CHECK(curve.points.size() == 200);
  CHECK(curve.eer_threshold > 0.49);
  CHECK(curve.eer_threshold < 1.0);
}

TEST_CASE("det sweep on indistinguishable scores yields 0.5") {
  std::vector<ScoredItem> items;
  for (int i = 0; i < 20; ++i) items.push_back({0.7, i % 2 == 0});
  const cguard::DetCurve curve = cguard::det_sweep(items);
  CHECK_THAT(curve.eer, Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("det sweep requires both classes and a real grid") {
  std::vector<ScoredItem> one_class{{0.1, true}, {0.2, true}};
  CHECK_THROWS_AS(cguard::det_sweep(one_class), std::invalid_argument);
  std::vector<ScoredItem> ok{{0.1, true}, {0.2, false}};
  CHECK_THROWS_AS(cguard::det_sweep(ok, 1), std::invalid_argument);
}

TEST_CASE("eer is invariant under increasing affine rescaling") {
  std::mt19937 gen(12);
  std::normal_distribution<double> clean(0.0, 1.0), collapsed(1.5, 1.0);
  std::vector<ScoredItem> items, scaled;
  for (int i = 0; i < 400; ++i) {
    const bool is_collapsed = i % 2 == 0;
    const double s = is_collapsed ? collapsed(gen) : clean(gen);
    items.push_back({s, is_collapsed});
    scaled.push_back({3.0 * s + 11.0, is_collapsed});
  }
  const cguard::DetCurve a = cguard::det_sweep(items);
  const cguard::DetCurve b = cguard::det_sweep(scaled);
  CHECK_THAT(a.eer, Catch::Matchers::WithinAbs(b.eer, 1e-12));
  CHECK(a.eer > 0.05);  // overlapping classes: genuinely nonzero
  CHECK(a.eer < 0.5);
}

TEST_CASE("well-separated score distributions give a tiny eer") {
  std::mt19937 gen(5);
  std::normal_distribution<double> clean(0.0, 0.1), collapsed(1.0, 0.1);
  std::vector<ScoredItem> items;
  for (int i = 0; i < 200; ++i) {
    const bool is_collapsed = i % 2 == 0;
    items.push_back({is_collapsed ? collapsed(gen) : clean(gen),
                     is_collapsed});
  }
  CHECK(cguard::det_sweep(items).eer <= 0.05);
}

namespace {

cguard::LabeledPair tiny_pair(bool with_fault, CollapseKind kind) {
  cguard::LabeledPair pair;
  pair.reference.sample_rate_hz = 22050;
  pair.reference.samples.resize(12000);
  cguard::Rng rng(81);
  for (std::size_t n = 0; n < 12000; ++n) {
    pair.reference.samples[n] =
        0.25 * std::sin(0.07 * static_cast<double>(n)) +
        rng.normal(0.0, 0.005);
  }
  std::optional<cguard::CollapsePlan> plan;
  if (with_fault) {
    plan.emplace();
    plan->kind = kind;
    plan->region = {5000, 2000};
    plan->amplitude_factor = 3.2;
    pair.truth.collapsed = true;
    pair.truth.regions.push_back({plan->region, kind});
  }
  pair.candidate = cguard::faulty_generate(pair.reference, plan, -30.0, 55);
  return pair;
}

}  // namespace

TEST_CASE("score_pair emits one item per segment at segment level") {
  const cguard::LabeledPair pair = tiny_pair(true, CollapseKind::TypeI);
  const auto items =
      cguard::score_pair(pair, cguard::StatKind::Env,
                         cguard::EvalLevel::Segment,
                         cguard::KindFilter::All, 4000, {});
  REQUIRE(items.size() == 3);
  CHECK_FALSE(items[0].collapsed);
  CHECK(items[1].collapsed);
  CHECK_FALSE(items[2].collapsed);
  CHECK(items[1].statistic > items[0].statistic);
  CHECK(items[1].statistic > 0.08);
  CHECK(items[0].statistic < 0.08);
}

TEST_CASE("score_pair filters segments by collapse kind") {
  const cguard::LabeledPair pair = tiny_pair(true, CollapseKind::TypeI);
  const auto type2_only =
      cguard::score_pair(pair, cguard::StatKind::Env,
                         cguard::EvalLevel::Segment,
                         cguard::KindFilter::TypeII, 4000, {});
  // The TypeI segment is dropped; the clean segments remain.
  REQUIRE(type2_only.size() == 2);
  CHECK_FALSE(type2_only[0].collapsed);
  CHECK_FALSE(type2_only[1].collapsed);
}

TEST_CASE("score_pair at utterance level emits at most one item") {
  const cguard::LabeledPair faulty = tiny_pair(true, CollapseKind::TypeI);
  const auto one =
      cguard::score_pair(faulty, cguard::StatKind::Env,
                         cguard::EvalLevel::Utterance,
                         cguard::KindFilter::All, 4000, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].collapsed);

  // A clean utterance always counts, whatever the kind filter.
  const cguard::LabeledPair clean = tiny_pair(false, CollapseKind::TypeI);
  const auto still_one =
      cguard::score_pair(clean, cguard::StatKind::Env,
                         cguard::EvalLevel::Utterance,
                         cguard::KindFilter::TypeII, 4000, {});
  REQUIRE(still_one.size() == 1);
  CHECK_FALSE(still_one[0].collapsed);

  // A collapsed utterance of the other kind is dropped entirely.
  const auto none =
      cguard::score_pair(faulty, cguard::StatKind::Env,
                         cguard::EvalLevel::Utterance,
                         cguard::KindFilter::TypeII, 4000, {});
  CHECK(none.empty());
}

TEST_CASE("segment-level max-power restricts frames to the segment") {
  const cguard::LabeledPair pair = tiny_pair(true, CollapseKind::TypeI);
  const auto items =
      cguard::score_pair(pair, cguard::StatKind::MaxPow,
                         cguard::EvalLevel::Segment,
                         cguard::KindFilter::All, 4000, {});
  REQUIRE(items.size() == 3);
  CHECK(items[1].statistic > 0.1);
  CHECK(std::abs(items[0].statistic) < 0.01);
  CHECK(std::abs(items[2].statistic) < 0.01);
}

TEST_CASE("synthetic corpus honors count, fraction, and determinism") {
  const auto corpus = cguard::synth_corpus(10, 0.5, 7);
  REQUIRE(corpus.size() == 10);
  std::size_t collapsed = 0, type1 = 0, type2 = 0;
  for (const cguard::LabeledPair& pair : corpus) {
    REQUIRE(pair.candidate.samples.size() == pair.reference.samples.size());
    cguard::validate_waveform(pair.reference);
    cguard::validate_waveform(pair.candidate);
    const std::size_t len = pair.reference.samples.size();
    CHECK(len >= 2 * 22050);
    CHECK(len <= 4 * 22050 + 1);
    if (pair.truth.collapsed) {
      ++collapsed;
      REQUIRE(pair.truth.regions.size() == 1);
      const LabeledRegion& r = pair.truth.regions[0];
      CHECK(r.span.end() <= len);
      (r.kind == CollapseKind::TypeI ? type1 : type2) += 1;
    } else {
      CHECK(pair.truth.regions.empty());
    }
  }
  CHECK(collapsed == 5);
  CHECK(type1 == 3);  // odd remainder goes to the first kind
  CHECK(type2 == 2);

  const auto again = cguard::synth_corpus(10, 0.5, 7);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(corpus[i].reference.samples == again[i].reference.samples);
    CHECK(corpus[i].candidate.samples == again[i].candidate.samples);
    CHECK(corpus[i].truth.collapsed == again[i].truth.collapsed);
  }
  CHECK_THROWS_AS(cguard::synth_corpus(4, 1.5, 7), std::invalid_argument);
}

TEST_CASE("detect flags the injected region on a corpus pair") {
  const auto corpus = cguard::synth_corpus(2, 1.0, 11);
  for (const cguard::LabeledPair& pair : corpus) {
    const cguard::DetectionReport report =
        cguard::detect(pair.candidate, pair.reference, 4000, {}, 0.08);
    CHECK(report.utterance_flagged);
    const auto labels = cguard::label_segments(
        pair.reference.samples.size(), 4000, pair.truth.regions);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != SegmentLabel::Clean) {
        CHECK(report.verdicts[i].flagged);
      }
    }
  }
}

TEST_CASE("a small corpus evaluates end to end with a low eer") {
  const auto corpus = cguard::synth_corpus(16, 0.5, 19);
  const cguard::DetCurve curve = cguard::evaluate_det(
      corpus, [](const cguard::LabeledPair& pair) {
        return cguard::score_pair(pair, cguard::StatKind::Env,
                                  cguard::EvalLevel::Segment,
                                  cguard::KindFilter::All, 4000, {});
      });
  CHECK(curve.eer <= 0.05);
}
