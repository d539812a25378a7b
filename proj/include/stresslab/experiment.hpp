// Copyright 2026 The stresslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration and the simulate / analyze pipelines behind the CLI.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stresslab/analysis.hpp"
#include "stresslab/clock_offset.hpp"
#include "stresslab/ecg.hpp"
#include "stresslab/error.hpp"
#include "stresslab/keywords.hpp"
#include "stresslab/plots.hpp"
#include "stresslab/recording_io.hpp"
#include "stresslab/session.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab::experiment {

namespace fs = std::filesystem;

inline constexpr const char* kMarkerStream = "game_events";
inline constexpr const char* kEcgStream = "ecg";
inline constexpr const char* kTranscriptStream = "transcript";

struct RunConfig {
  std::uint64_t seed = 1;
  std::string participant_id = "P";
  int participants = 2;
  session::SimulatedPlayerConfig player;
  ecg::EcgCondition rest{84.0, 50.0};
  ecg::EcgCondition easy{82.0, 40.0};
  ecg::EcgCondition hard{96.0, 30.0};
  ecg::SynthParams synth;
  double device_clock_offset_s = 0.125;
  double offset_probe_period_s = 5.0;
  fs::path out_dir = "out";
  stats::SeMode stats_mode = stats::SeMode::variance_corrected;
  bool plots = false;
  bool ndjson_report = false;
  std::optional<fs::path> transcript;
  std::optional<fs::path> keywords;
  std::string bind = "127.0.0.1:8765";
  double time_scale = 1.0;

  const ecg::EcgCondition& condition(SessionKind kind) const {
    return kind == SessionKind::hard ? hard : kind == SessionKind::easy ? easy : rest;
  }

  /// Participant ids: "<prefix><n>" when running several, the bare id when one.
  std::string participant(int n) const {
    return participants == 1 ? participant_id : participant_id + std::to_string(n);
  }
};

inline void validate(const RunConfig& cfg) {
  if (cfg.participants < 1) fail(Errc::BadParameter, "participants must be >= 1");
  if (cfg.participant_id.empty()) fail(Errc::BadParameter, "participant_id must not be empty");
  for (const auto* c : {&cfg.rest, &cfg.easy, &cfg.hard}) {
    if (!(c->hr_bpm >= 30.0 && c->hr_bpm <= 220.0)) fail(Errc::BadParameter, "hr_bpm must be in [30, 220]");
    if (!(c->rmssd_ms >= 0.0)) fail(Errc::BadParameter, "rmssd_ms must be >= 0");
  }
  if (!(cfg.synth.sample_rate_hz >= ecg::kMinAnalysisRateHz)) fail(Errc::BadParameter, "sample_rate_hz must be >= 100");
  if (!(cfg.synth.noise_mv >= 0.0)) fail(Errc::BadParameter, "noise_mv must be >= 0");
  if (!(cfg.offset_probe_period_s > 0.0)) fail(Errc::BadParameter, "offset_probe_period_s must be positive");
  if (!(cfg.time_scale > 0.0)) fail(Errc::BadParameter, "time_scale must be positive");
  session::validate(cfg.player.base);
  if (cfg.player.easy) session::validate(*cfg.player.easy);
  if (cfg.player.hard) session::validate(*cfg.player.hard);
}

// --- config file -------------------------------------------------------------

/// Flat "key = value" lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& is, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::ParseError, origin + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    fail(Errc::ParseError, "config key '" + key + "': '" + v + "' is not a number");
  return x;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    fail(Errc::ParseError, "config key '" + key + "': '" + v + "' is not an integer");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(Errc::ParseError, "config key '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace detail

inline stats::SeMode parse_stats_mode(const std::string& v) {
  if (v == "corrected" || v == "variance_corrected") return stats::SeMode::variance_corrected;
  if (v == "literal" || v == "paper_literal") return stats::SeMode::paper_literal;
  fail(Errc::BadParameter, "stats mode must be 'literal' or 'corrected', got '" + v + "'");
}

/// Applies recognised keys to cfg; unknown keys are an error.
inline void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  using detail::to_double;
  for (const auto& [k, v] : kv) {
    auto override_of = [&](std::optional<session::PlayerParams>& o) -> session::PlayerParams& {
      if (!o) o = cfg.player.base;
      return *o;
    };
    if (k == "seed") cfg.seed = detail::to_int<std::uint64_t>(k, v);
    else if (k == "participant_id") cfg.participant_id = v;
    else if (k == "participants") cfg.participants = detail::to_int<int>(k, v);
    else if (k == "reaction_delay_s") cfg.player.base.reaction_delay_s = to_double(k, v);
    else if (k == "error_prob") cfg.player.base.error_prob = to_double(k, v);
    else if (k == "easy.reaction_delay_s") override_of(cfg.player.easy).reaction_delay_s = to_double(k, v);
    else if (k == "easy.error_prob") override_of(cfg.player.easy).error_prob = to_double(k, v);
    else if (k == "hard.reaction_delay_s") override_of(cfg.player.hard).reaction_delay_s = to_double(k, v);
    else if (k == "hard.error_prob") override_of(cfg.player.hard).error_prob = to_double(k, v);
    else if (k == "rest.hr_bpm") cfg.rest.hr_bpm = to_double(k, v);
    else if (k == "rest.rmssd_ms") cfg.rest.rmssd_ms = to_double(k, v);
    else if (k == "easy.hr_bpm") cfg.easy.hr_bpm = to_double(k, v);
    else if (k == "easy.rmssd_ms") cfg.easy.rmssd_ms = to_double(k, v);
    else if (k == "hard.hr_bpm") cfg.hard.hr_bpm = to_double(k, v);
    else if (k == "hard.rmssd_ms") cfg.hard.rmssd_ms = to_double(k, v);
    else if (k == "sample_rate_hz") cfg.synth.sample_rate_hz = to_double(k, v);
    else if (k == "noise_mv") cfg.synth.noise_mv = to_double(k, v);
    else if (k == "device_clock_offset_s") cfg.device_clock_offset_s = to_double(k, v);
    else if (k == "offset_probe_period_s") cfg.offset_probe_period_s = to_double(k, v);
    else if (k == "out") cfg.out_dir = v;
    else if (k == "stats_mode") cfg.stats_mode = parse_stats_mode(v);
    else if (k == "plots") cfg.plots = detail::to_bool(k, v);
    else if (k == "format") {
      if (v != "json" && v != "ndjson") fail(Errc::ParseError, "config key 'format' must be json or ndjson");
      cfg.ndjson_report = v == "ndjson";
    }
    else if (k == "transcript") cfg.transcript = fs::path(v);
    else if (k == "keywords") cfg.keywords = fs::path(v);
    else if (k == "bind") cfg.bind = v;
    else if (k == "time_scale") cfg.time_scale = to_double(k, v);
    else fail(Errc::ParseError, "unknown config key '" + k + "'");
  }
}

inline void load_config(RunConfig& cfg, const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::IoError, "cannot open config '" + path.string() + "'");
  apply_config(cfg, parse_key_values(is, path.string()));
}

inline keywords::KeywordDictionary dictionary_for(const RunConfig& cfg) {
  return cfg.keywords ? keywords::load_dictionary(*cfg.keywords) : keywords::default_dictionary();
}

// --- ECG device model --------------------------------------------------------

/// Streams synthetic ECG for a running experiment. Conditions follow the
/// sessions as they start; samples are pushed in 1 s chunks stamped with the
/// device clock (recorder time + a fixed offset), and the device offset is
/// probed over a simulated link every offset_probe_period_s.
class EcgStreamer {
 public:
  EcgStreamer(const RunConfig& cfg, std::uint64_t seed, Outlet outlet, StreamHub& hub)
      : cfg_(cfg),
        outlet_(std::move(outlet)),
        hub_(hub),
        synth_(derive_seed(seed, 0xEC6), cfg.synth, [this](double t) { return condition_at(t); }),
        link_(cfg.device_clock_offset_s, 0.0005, 0.003, derive_seed(seed, 0x11C)),
        chunk_(static_cast<std::size_t>(std::lround(cfg.synth.sample_rate_hz))) {}

  void session_started(SessionKind kind, double t) { schedule_.push_back({t, kind}); }

  /// Emits every chunk whose samples (plus the spike lookahead) are settled.
  void advance(double now) {
    while (now >= next_probe_) {
      hub_.record_offset(estimate_clock_offset(link_.probes(next_probe_, 4, 0.01), outlet_.stream_id()));
      next_probe_ += cfg_.offset_probe_period_s;
    }
    while (chunk_end(emitted_ + chunk_) + synth_.lookahead_s() <= now) emit(chunk_);
  }

  /// Renders the remainder up to end_s.
  void finish(double end_s) {
    advance(end_s);
    const auto total = static_cast<std::size_t>(std::llround(end_s * cfg_.synth.sample_rate_hz));
    while (emitted_ < total) emit(std::min(chunk_, total - emitted_));
  }

  const std::vector<double>& peaks() const { return synth_.peaks(); }

 private:
  double chunk_end(std::size_t samples) const { return static_cast<double>(samples) / cfg_.synth.sample_rate_hz; }

  void emit(std::size_t n) {
    const double t0 = static_cast<double>(emitted_) / cfg_.synth.sample_rate_hz;
    outlet_.push_chunk(t0 + cfg_.device_clock_offset_s, synth_.render(n));
    emitted_ += n;
  }

  ecg::EcgCondition condition_at(double t) const {
    SessionKind kind = SessionKind::rest;
    for (const auto& [start, k] : schedule_) {
      if (start > t) break;
      kind = k;
    }
    return cfg_.condition(kind);
  }

  const RunConfig& cfg_;
  Outlet outlet_;
  StreamHub& hub_;
  std::vector<std::pair<double, SessionKind>> schedule_;
  ecg::EcgSynthesizer synth_;
  SimulatedLink link_;
  std::size_t chunk_;
  std::size_t emitted_ = 0;
  double next_probe_ = 0.0;
};

// --- simulate ----------------------------------------------------------------

struct ParticipantRun {
  session::ExperimentPlan plan;
  session::SessionLog log;
  Recording recording;
  std::vector<double> true_peaks_s;
};

struct StandardOutlets {
  Outlet markers;
  Outlet ecg;
  Outlet transcript;
};

inline StandardOutlets create_standard_outlets(StreamHub& hub, double ecg_rate_hz) {
  return {hub.create_outlet({kMarkerStream, "Game events", StreamKind::marker, 1, 0.0, "marker"}),
          hub.create_outlet({kEcgStream, "ECG", StreamKind::signal, 1, ecg_rate_hz, "mV"}),
          hub.create_outlet({kTranscriptStream, "Transcript", StreamKind::marker, 1, 0.0,
                             std::string(kFreeTextUnit)})};
}

inline std::uint64_t participant_seed(const RunConfig& cfg, int n) {
  return cfg.participants == 1 ? cfg.seed : derive_seed(cfg.seed, static_cast<std::uint64_t>(n));
}

/// One participant: plan, simulated player, ECG device, offsets, captions.
inline ParticipantRun simulate_participant(const RunConfig& cfg, int n,
                                           const std::vector<keywords::TranscriptEvent>& transcript = {}) {
  validate(cfg);
  const std::uint64_t seed = participant_seed(cfg, n);
  ParticipantRun run;
  run.plan = session::build_plan(cfg.participant(n), seed);

  StreamHub hub;
  auto outlets = create_standard_outlets(hub, cfg.synth.sample_rate_hz);
  EcgStreamer streamer(cfg, seed, outlets.ecg, hub);
  const auto dict = dictionary_for(cfg);

  session::SimulatedPlayerConfig pcfg = cfg.player;
  pcfg.seed = derive_seed(seed, 0x91A);
  session::SimulatedPlayer player(pcfg);
  session::SimClock clock;
  session::ExperimentHooks hooks;
  hooks.on_session_start = [&](const session::SessionSpec& spec, double t, const game::BombState*) {
    streamer.session_started(spec.kind, t);
  };
  hooks.on_tick = [&](double t) { streamer.advance(t); };
  streamer.advance(0.0);
  run.log = session::run_experiment(run.plan, player, {&outlets.markers, &outlets.transcript, &dict}, clock, hooks,
                                    transcript);
  streamer.finish(run.plan.scheduled_total_s());
  run.recording = hub.recording();
  run.true_peaks_s = streamer.peaks();
  return run;
}

struct SimulateOutput {
  std::vector<fs::path> recordings;
  std::vector<fs::path> plans;
};

inline SimulateOutput cmd_simulate(const RunConfig& cfg) {
  validate(cfg);
  std::vector<keywords::TranscriptEvent> transcript;
  if (cfg.transcript) transcript = keywords::load_transcript(*cfg.transcript);
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) fail(Errc::IoError, "cannot create '" + cfg.out_dir.string() + "': " + ec.message());
  SimulateOutput out;
  for (int n = 1; n <= cfg.participants; ++n) {
    const auto run = simulate_participant(cfg, n, transcript);
    const fs::path rec = cfg.out_dir / (run.plan.participant_id + ".mrec");
    const fs::path plan = cfg.out_dir / (run.plan.participant_id + ".plan.ndjson");
    record_to_file(run.recording, rec);
    session::write_plan(run.plan, plan);
    out.recordings.push_back(rec);
    out.plans.push_back(plan);
  }
  return out;
}

// --- analyze -----------------------------------------------------------------

inline analysis::Report analyze_recordings(const std::vector<std::pair<std::string, Recording>>& recs,
                                           stats::SeMode mode) {
  std::vector<std::string> sources;
  std::vector<analysis::SessionResult> sessions;
  for (const auto& [label, rec] : recs) {
    sources.push_back(label);
    auto rows = analysis::analyze_recording(rec, label);
    sessions.insert(sessions.end(), rows.begin(), rows.end());
  }
  return analysis::build_report(std::move(sources), std::move(sessions), mode);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot write '" + path.string() + "'");
  os << text;
  if (!os) fail(Errc::IoError, "write to '" + path.string() + "' failed");
}

struct AnalyzeOutput {
  analysis::Report report;
  fs::path report_path;
  std::vector<fs::path> plots;
};

/// Report (and optional plots) for one or more recordings, pooled.
inline AnalyzeOutput cmd_analyze(const std::vector<fs::path>& paths, const RunConfig& cfg) {
  if (paths.empty()) fail(Errc::BadParameter, "no recordings given");
  std::vector<std::pair<std::string, Recording>> recs;
  for (const auto& p : paths) recs.emplace_back(p.stem().string(), load_recording(p));
  AnalyzeOutput out{analyze_recordings(recs, cfg.stats_mode), {}, {}};
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) fail(Errc::IoError, "cannot create '" + cfg.out_dir.string() + "': " + ec.message());
  if (cfg.ndjson_report) {
    out.report_path = cfg.out_dir / "report.ndjson";
    write_text(out.report_path, analysis::report_ndjson(out.report));
  } else {
    out.report_path = cfg.out_dir / "report.json";
    write_text(out.report_path, analysis::report_json(out.report).dump(2) + "\n");
  }
  if (cfg.plots) {
    auto emit = [&](const std::string& name, const std::string& svg) {
      out.plots.push_back(cfg.out_dir / name);
      write_text(out.plots.back(), svg);
    };
    emit("hr_bars.svg", plots::hr_bars(out.report.conditions));
    emit("hrv_bars.svg", plots::hrv_bars(out.report.conditions));
    for (const auto& [label, rec] : recs) emit("overlay_" + label + ".svg", plots::overlay(rec));
  }
  return out;
}

}  // namespace stresslab::experiment
