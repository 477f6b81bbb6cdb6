// tools/cguard_main.cpp
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

// Command-line surface for the collapse-guard library. Subcommands:
//   mulaw        codec table or WAV roundtrip
//   envelope     amplitude envelope as CSV
//   lpc          per-frame predictor coefficients as CSV
//   detect       segment verdicts for a candidate/reference pair as JSON
//   regen-sim    guarded generation with optional fault injection
//   synth-corpus labeled synthetic corpus as WAV pairs + labels.json
//   eval-det     DET sweep over a synthesized corpus as CSV
//
// Machine-readable output goes to stdout or the requested file; diagnostics
// go to stderr. Exit codes: 0 success, 1 runtime failure, 2 usage error.
// Every randomized path takes its seed from the config or --seed, so
// repeated invocations produce byte-identical artifacts.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cguard/config.hpp"
#include "cguard/detector.hpp"
#include "cguard/envelope.hpp"
#include "cguard/generator.hpp"
#include "cguard/lpc.hpp"
#include "cguard/mulaw.hpp"
#include "cguard/wav_io.hpp"
#include "cguard/waveform.hpp"

namespace {

using nlohmann::json;

// Shortest lossless decimal form, locale-independent.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file \"" + path + "\"");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing \"" + path + "\"");
  }
}

// Runs fn(0..n-1) on up to `jobs` threads. Indices are claimed atomically;
// callers keep outputs in per-index slots so ordering never depends on the
// worker count. The first exception wins and is rethrown on the caller.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, n == 0 ? 1 : n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::string utt_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt_%04zu", index);
  return buf;
}

cguard::CollapseKind kind_from_string(const std::string& s) {
  if (s == "typeI") return cguard::CollapseKind::TypeI;
  if (s == "typeII") return cguard::CollapseKind::TypeII;
  throw std::runtime_error("unknown collapse kind \"" + s + "\"");
}

json segment_json(const cguard::SegmentVerdict& v) {
  return json{{"start", v.segment.start},
              {"length", v.segment.length},
              {"statistic", v.statistic},
              {"flagged", v.flagged}};
}

// ------------------------------------------------------------------ mulaw

int run_mulaw(bool table, const std::string& in_path,
              const std::string& wav_out, const std::string& out_path) {
  if (table) {
    std::ostringstream csv;
    csv << "code,level\n";
    const auto& levels = cguard::mulaw_decode_levels();
    for (std::size_t b = 0; b < cguard::kMuLawLevels; ++b) {
      csv << b << ',' << fmt(levels[b]) << '\n';
    }
    write_text(out_path, csv.str());
    return 0;
  }
  if (in_path.empty() || wav_out.empty()) {
    throw std::runtime_error("mulaw: need --table, or both --in and --out");
  }
  const cguard::Waveform w = cguard::read_wav(in_path);
  cguard::write_wav(wav_out, cguard::mulaw_roundtrip(w));
  std::cerr << "roundtripped " << w.samples.size() << " samples\n";
  return 0;
}

// --------------------------------------------------------------- envelope

int run_envelope(const cguard::Config& cfg, const std::string& in_path,
                 std::size_t start, std::size_t length,
                 const std::string& out_path) {
  const cguard::Waveform w = cguard::read_wav(in_path);
  if (length == 0) {
    if (start >= w.samples.size()) {
      throw std::runtime_error("envelope: --start beyond end of file");
    }
    length = w.samples.size() - start;
  }
  const cguard::Envelope env =
      cguard::extract_envelope(w, {start, length}, cfg.envelope);
  std::ostringstream csv;
  csv << "sample_index,envelope_value\n";
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    csv << (start + i) << ',' << fmt(env.values[i]) << '\n';
  }
  write_text(out_path, csv.str());
  return 0;
}

// -------------------------------------------------------------------- lpc

int run_lpc(const cguard::Config& cfg, const std::string& ref_path,
            const std::string& out_path) {
  const cguard::Waveform ref = cguard::read_wav(ref_path);
  const cguard::LpcAnalysis analysis = cguard::analyze_reference(ref, cfg.lpc);
  std::ostringstream csv;
  csv << "frame_index,start";
  for (std::size_t i = 1; i <= cfg.lpc.order; ++i) csv << ",a_" << i;
  csv << ",residual_variance\n";
  for (std::size_t f = 0; f < analysis.frames.size(); ++f) {
    const cguard::LpcFrame& frame = analysis.frames[f];
    csv << f << ',' << frame.start;
    for (double a : frame.coeffs) csv << ',' << fmt(a);
    csv << ',' << fmt(frame.residual_variance) << '\n';
  }
  write_text(out_path, csv.str());
  return 0;
}

// ----------------------------------------------------------------- detect

int run_detect(const cguard::Config& cfg, const std::string& cand_path,
               const std::string& ref_path, const std::string& out_path) {
  const cguard::Waveform cand = cguard::read_wav(cand_path);
  const cguard::Waveform ref = cguard::read_wav(ref_path);
  const cguard::DetectionReport report =
      cguard::detect(cand, ref, cfg.seg_len, cfg.envelope, cfg.threshold);
  json j{{"schema", 1},
         {"seg_len", cfg.seg_len},
         {"threshold", cfg.threshold},
         {"utterance_flagged", report.utterance_flagged}};
  j["segments"] = json::array();
  for (const cguard::SegmentVerdict& v : report.verdicts) {
    j["segments"].push_back(segment_json(v));
  }
  write_text(out_path, j.dump(2) + "\n");
  return 0;
}

// -------------------------------------------------------------- regen-sim

int run_regen_sim(const cguard::Config& cfg, const std::string& ref_path,
                  const std::string& wav_out, const std::string& report_path,
                  const std::string& inject, std::size_t inject_at,
                  bool inject_at_set, std::size_t inject_len,
                  double inject_factor) {
  const cguard::Waveform ref = cguard::read_wav(ref_path);
  const cguard::LpcAnalysis analysis = cguard::analyze_reference(ref, cfg.lpc);

  std::vector<cguard::CollapsePlan> plans;
  json inject_json = nullptr;
  if (inject != "none") {
    cguard::CollapsePlan plan;
    plan.kind = kind_from_string(inject);
    if (!inject_at_set) inject_at = cfg.seg_len + cfg.seg_len / 4;
    plan.region = {inject_at, inject_len};
    plan.amplitude_factor = inject_factor;
    if (plan.kind == cguard::CollapseKind::TypeII) {
      plan.impulse_count = cguard::detail::plan_impulse_count(inject_len);
    }
    plans.push_back(plan);
    inject_json = json{{"kind", inject},
                       {"start", plan.region.start},
                       {"length", plan.region.length}};
  }

  cguard::TrackingGenerator gen(ref, plans, cfg.seed);
  auto [out, report] = cguard::generate_with_guard(
      ref.samples.size(), cfg.seg_len, ref, analysis, cfg.envelope,
      cfg.threshold, cfg.schedule, gen, cfg.mask_floor);

  if (!wav_out.empty()) cguard::write_wav(wav_out, out);

  json j{{"schema", 1},
         {"seed", cfg.seed},
         {"seg_len", cfg.seg_len},
         {"threshold", cfg.threshold},
         {"rho_schedule", cfg.schedule.values},
         {"inject", inject_json}};
  j["segments"] = json::array();
  for (const cguard::GuardRecord& r : report.segments) {
    json seg{{"start", r.segment.start},
             {"length", r.segment.length},
             {"statistic", r.statistic},
             {"flagged", r.flagged},
             {"residual", r.residual}};
    seg["rho_used"] = r.rho_used ? json(*r.rho_used) : json(nullptr);
    j["segments"].push_back(std::move(seg));
  }
  write_text(report_path, j.dump(2) + "\n");
  return 0;
}

// ----------------------------------------------------------- synth-corpus

int run_synth_corpus(const cguard::Config& cfg, const std::string& out_dir,
                     std::size_t n, double fraction, std::size_t jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto kinds = cguard::detail::corpus_kinds(n, fraction, cfg.seed);

  json labels{{"schema", 1},
              {"sample_rate_hz", cfg.sample_rate_hz},
              {"seed", cfg.seed}};
  std::vector<json> entries(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const cguard::LabeledPair pair =
        cguard::detail::synth_pair(i, kinds[i], cfg.seed, cfg.sample_rate_hz);
    const std::string name = utt_name(i);
    cguard::write_wav((fs::path(out_dir) / (name + "_ref.wav")).string(),
                      pair.reference);
    cguard::write_wav((fs::path(out_dir) / (name + "_cand.wav")).string(),
                      pair.candidate);
    json e{{"utterance", name}, {"collapsed", pair.truth.collapsed}};
    e["kind"] = pair.truth.collapsed
                    ? json(cguard::to_string(pair.truth.regions[0].kind))
                    : json(nullptr);
    e["regions"] = json::array();
    for (const cguard::LabeledRegion& r : pair.truth.regions) {
      e["regions"].push_back(json{{"start", r.span.start},
                                  {"length", r.span.length},
                                  {"kind", cguard::to_string(r.kind)}});
    }
    entries[i] = std::move(e);
  });
  labels["utterances"] = json(entries);

  std::ofstream out(fs::path(out_dir) / "labels.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write labels.json under " + out_dir);
  }
  out << labels.dump(2) << "\n";
  std::cerr << "wrote " << n << " utterance pairs to " << out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------- eval-det

int run_eval_det(const cguard::Config& cfg, const std::string& corpus_dir,
                 const std::string& level, const std::string& stat,
                 const std::string& type, const std::string& out_path,
                 std::size_t jobs) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(corpus_dir) / "labels.json");
  if (!in) {
    throw std::runtime_error("cannot open labels.json under " + corpus_dir);
  }
  json labels;
  in >> labels;
  if (!labels.contains("utterances")) {
    throw std::runtime_error("labels.json has no \"utterances\" array");
  }
  const auto& utts = labels.at("utterances");

  const cguard::EvalLevel eval_level = level == "utterance"
                                           ? cguard::EvalLevel::Utterance
                                           : cguard::EvalLevel::Segment;
  const cguard::StatKind stat_kind =
      stat == "maxpow" ? cguard::StatKind::MaxPow : cguard::StatKind::Env;
  const cguard::KindFilter filter =
      type == "typeI" ? cguard::KindFilter::TypeI
      : type == "typeII" ? cguard::KindFilter::TypeII
                         : cguard::KindFilter::All;

  std::vector<std::vector<cguard::ScoredItem>> scored(utts.size());
  parallel_for(utts.size(), jobs, [&](std::size_t i) {
    const json& e = utts.at(i);
    const std::string name = e.at("utterance").get<std::string>();
    cguard::LabeledPair pair;
    pair.reference =
        cguard::read_wav((fs::path(corpus_dir) / (name + "_ref.wav")).string());
    pair.candidate = cguard::read_wav(
        (fs::path(corpus_dir) / (name + "_cand.wav")).string());
    pair.truth.collapsed = e.at("collapsed").get<bool>();
    for (const json& r : e.at("regions")) {
      pair.truth.regions.push_back(
          {{r.at("start").get<std::size_t>(), r.at("length").get<std::size_t>()},
           kind_from_string(r.at("kind").get<std::string>())});
    }
    scored[i] = cguard::score_pair(pair, stat_kind, eval_level, filter,
                                   cfg.seg_len, cfg.envelope);
  });

  std::vector<cguard::ScoredItem> items;
  for (const auto& s : scored) items.insert(items.end(), s.begin(), s.end());
  const cguard::DetCurve curve =
      cguard::det_sweep(items, cfg.det_grid_points);

  std::ostringstream csv;
  csv << "threshold,fa_rate,fr_rate\n";
  for (const cguard::DetPoint& p : curve.points) {
    csv << fmt(p.threshold) << ',' << fmt(p.fa_rate) << ',' << fmt(p.fr_rate)
        << '\n';
  }
  csv << "# eer=" << fmt(curve.eer) << " threshold=" << fmt(curve.eer_threshold)
      << " fa=" << fmt(curve.eer_fa) << " fr=" << fmt(curve.eer_fr)
      << " items=" << items.size() << '\n';
  write_text(out_path, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segment collapse detection and guarded regeneration toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (defaults apply)");

  // Common overrides; only applied when actually passed.
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seg_len;
  std::optional<double> threshold;

  auto* c_mulaw = app.add_subcommand("mulaw", "codec table or WAV roundtrip");
  bool table = false;
  std::string m_in, m_out, m_csv;
  c_mulaw->add_flag("--table", table, "emit the 256-level decode table CSV");
  c_mulaw->add_option("--in", m_in, "input WAV");
  c_mulaw->add_option("--out", m_out, "roundtripped WAV");
  c_mulaw->add_option("--csv", m_csv, "table CSV path (default stdout)");

  auto* c_env = app.add_subcommand("envelope", "amplitude envelope CSV");
  std::string e_in, e_out;
  std::size_t e_start = 0, e_len = 0;
  c_env->add_option("--in", e_in, "input WAV")->required();
  c_env->add_option("--start", e_start, "span start sample (default 0)");
  c_env->add_option("--length", e_len, "span length (default to end)");
  c_env->add_option("--out", e_out, "CSV path (default stdout)");

  auto* c_lpc = app.add_subcommand("lpc", "per-frame predictor CSV");
  std::string l_ref, l_out;
  c_lpc->add_option("--ref", l_ref, "reference WAV")->required();
  c_lpc->add_option("--out", l_out, "CSV path (default stdout)");

  auto* c_detect = app.add_subcommand("detect", "segment verdicts JSON");
  std::string d_cand, d_ref, d_out;
  c_detect->add_option("--cand", d_cand, "candidate WAV")->required();
  c_detect->add_option("--ref", d_ref, "reference WAV")->required();
  c_detect->add_option("--out", d_out, "JSON path (default stdout)");
  c_detect->add_option("--threshold", threshold, "detection threshold");
  c_detect->add_option("--seg-len", seg_len, "segment length in samples");

  auto* c_regen = app.add_subcommand("regen-sim",
                                     "guarded generation with injection");
  std::string r_ref, r_out, r_report, r_inject = "none";
  std::vector<double> r_rho;
  std::size_t r_at = 0, r_len = 2000;
  double r_factor = 3.2;
  c_regen->add_option("--ref", r_ref, "reference WAV")->required();
  c_regen->add_option("--out", r_out, "generated WAV path");
  c_regen->add_option("--report", r_report, "report JSON path (default stdout)");
  c_regen->add_option("--seed", seed, "generator seed");
  c_regen->add_option("--seg-len", seg_len, "segment length in samples");
  c_regen->add_option("--threshold", threshold, "detection threshold");
  c_regen->add_option("--rho", r_rho, "escalation exponents")->delimiter(',');
  c_regen->add_option("--inject", r_inject, "fault kind")
      ->check(CLI::IsMember({"typeI", "typeII", "none"}));
  c_regen->add_option("--inject-at", r_at, "fault region start sample");
  c_regen->add_option("--inject-len", r_len, "fault region length");
  c_regen->add_option("--inject-factor", r_factor,
                      "TypeI amplitude factor (x max|ref|)");

  auto* c_synth = app.add_subcommand("synth-corpus",
                                     "labeled synthetic corpus");
  std::string s_dir;
  std::size_t s_n = 50, s_jobs = 1;
  double s_fraction = 0.5;
  c_synth->add_option("--out-dir", s_dir, "output directory")->required();
  c_synth->add_option("--n", s_n, "utterance count");
  c_synth->add_option("--fraction", s_fraction, "collapsed fraction [0,1]");
  c_synth->add_option("--seed", seed, "corpus seed");
  c_synth->add_option("--jobs", s_jobs, "worker threads");

  auto* c_eval = app.add_subcommand("eval-det", "DET sweep CSV");
  std::string v_dir, v_level = "segment", v_stat = "env", v_type = "all",
              v_out;
  std::size_t v_jobs = 1;
  c_eval->add_option("--corpus", v_dir, "synth-corpus directory")->required();
  c_eval->add_option("--level", v_level, "evaluation granularity")
      ->check(CLI::IsMember({"segment", "utterance"}));
  c_eval->add_option("--stat", v_stat, "detection statistic")
      ->check(CLI::IsMember({"env", "maxpow"}));
  c_eval->add_option("--type", v_type, "collapse kind filter")
      ->check(CLI::IsMember({"all", "typeI", "typeII"}));
  c_eval->add_option("--out", v_out, "CSV path (default stdout)");
  c_eval->add_option("--jobs", v_jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cguard::Config cfg;
    if (!config_path.empty()) cfg = cguard::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (seg_len) cfg.seg_len = *seg_len;
    if (threshold) cfg.threshold = *threshold;
    if (!r_rho.empty()) cfg.schedule.values = r_rho;
    cfg.validate();

    if (*c_mulaw) return run_mulaw(table, m_in, m_out, m_csv);
    if (*c_env) return run_envelope(cfg, e_in, e_start, e_len, e_out);
    if (*c_lpc) return run_lpc(cfg, l_ref, l_out);
    if (*c_detect) return run_detect(cfg, d_cand, d_ref, d_out);
    if (*c_regen) {
      return run_regen_sim(cfg, r_ref, r_out, r_report, r_inject, r_at,
                           c_regen->count("--inject-at") > 0, r_len, r_factor);
    }
    if (*c_synth) return run_synth_corpus(cfg, s_dir, s_n, s_fraction, s_jobs);
    if (*c_eval) {
      return run_eval_det(cfg, v_dir, v_level, v_stat, v_type, v_out, v_jobs);
    }
    throw std::runtime_error("no subcommand dispatched");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
