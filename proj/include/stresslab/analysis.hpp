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

// Recording -> per-session HR/RMSSD -> per-condition summaries -> t-tests,
// and the JSON report built from them.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stresslab/ecg.hpp"
#include "stresslab/error.hpp"
#include "stresslab/markers.hpp"
#include "stresslab/stats.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab::analysis {

using ojson = nlohmann::ordered_json;

struct Segment {
  std::string source;  // recording label, for pooled analyses
  int session_index = 0;
  SessionKind kind = SessionKind::rest;
  SessionOutcome outcome = SessionOutcome::rest_over;
  double start_s = 0.0;
  double end_s = 0.0;
  ecg::EcgTrace trace;
};

/// The streams segmentation works on: the single signal stream, and the
/// single marker stream that carries session markers.
struct StreamChoice {
  StreamDecl signal;
  StreamDecl markers;
};

inline StreamChoice choose_streams(const Recording& rec) {
  std::vector<StreamDecl> signals, marker_streams;
  for (const auto& d : rec.decls()) {
    if (d.kind == StreamKind::signal) {
      signals.push_back(d);
    } else if (!d.free_text()) {
      for (const auto& m : rec.markers(d.stream_id)) {
        auto parsed = parse_marker(m.label);
        if (parsed && (std::holds_alternative<marker::SessionStart>(*parsed) ||
                       std::holds_alternative<marker::SessionEnd>(*parsed))) {
          marker_streams.push_back(d);
          break;
        }
      }
    }
  }
  if (signals.size() != 1)
    fail(Errc::MissingStream, "expected exactly one ECG signal stream, found " + std::to_string(signals.size()));
  if (marker_streams.size() != 1)
    fail(Errc::MissingStream,
         "expected exactly one session marker stream, found " + std::to_string(marker_streams.size()));
  return {signals.front(), marker_streams.front()};
}

struct SessionBounds {
  int index = 0;
  SessionKind kind = SessionKind::rest;
  SessionOutcome outcome = SessionOutcome::rest_over;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Pairs session_start/session_end markers (recorder clock). Sessions must
/// not interleave and every start needs its end.
inline std::vector<SessionBounds> session_bounds(const std::vector<MarkerEvent>& markers) {
  std::vector<SessionBounds> out;
  std::optional<SessionBounds> open;
  for (const auto& m : markers) {
    auto parsed = parse_marker(m.label);
    if (!parsed) continue;
    if (const auto* s = std::get_if<marker::SessionStart>(&*parsed)) {
      if (open)
        fail(Errc::MalformedMarkers, "session " + std::to_string(s->index) + " starts before session " +
                                         std::to_string(open->index) + " ended");
      open = SessionBounds{s->index, s->kind, SessionOutcome::rest_over, m.timestamp_s, m.timestamp_s};
    } else if (const auto* e = std::get_if<marker::SessionEnd>(&*parsed)) {
      if (!open || open->index != e->index || open->kind != e->kind)
        fail(Errc::MalformedMarkers, "unmatched '" + m.label + "'");
      open->end_s = m.timestamp_s;
      open->outcome = e->outcome;
      out.push_back(*open);
      open.reset();
    }
  }
  if (open) fail(Errc::MalformedMarkers, "session " + std::to_string(open->index) + " never ends");
  return out;
}

/// One ECG slice per session. Each chunk is placed on the recorder clock
/// through the stream's offset records; a sample belongs to a session when
/// its mapped time lies in [start, end].
inline std::vector<Segment> segment_by_markers(const Recording& rec, const std::string& source = {}) {
  const StreamChoice streams = choose_streams(rec);
  const auto bounds = session_bounds(rec.markers_in_recorder_clock(streams.markers.stream_id));
  const ClockMap map = rec.clock_map(streams.signal.stream_id);
  const double rate = streams.signal.nominal_rate_hz;

  struct Placed {
    double t0;
    const SignalChunk* chunk;
  };
  const auto chunks = rec.chunks(streams.signal.stream_id);
  std::vector<Placed> placed;
  placed.reserve(chunks.size());
  for (const auto& c : chunks) placed.push_back({map.to_recorder(c.first_timestamp_s), &c});

  std::vector<Segment> out;
  out.reserve(bounds.size());
  std::size_t first_chunk = 0;
  for (const auto& b : bounds) {
    Segment seg{source, b.index, b.kind, b.outcome, b.start_s, b.end_s, {rate, {}, b.start_s}};
    bool first = true;
    while (first_chunk < placed.size() &&
           placed[first_chunk].t0 + static_cast<double>(placed[first_chunk].chunk->sample_count()) / rate < b.start_s)
      ++first_chunk;
    for (std::size_t c = first_chunk; c < placed.size() && placed[c].t0 <= b.end_s; ++c) {
      const auto n = static_cast<long>(placed[c].chunk->sample_count());
      const long lo = std::max(0L, static_cast<long>(std::ceil((b.start_s - placed[c].t0) * rate - 1e-6)));
      const long hi = std::min(n - 1, static_cast<long>(std::floor((b.end_s - placed[c].t0) * rate + 1e-6)));
      for (long i = lo; i <= hi; ++i) {
        if (first) {
          seg.trace.start_timestamp_s = placed[c].t0 + static_cast<double>(i) / rate;
          first = false;
        }
        seg.trace.samples_mv.push_back(placed[c].chunk->at(static_cast<std::size_t>(i)));
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

struct SessionResult {
  std::string source;
  int session_index = 0;
  SessionKind kind = SessionKind::rest;
  SessionOutcome outcome = SessionOutcome::rest_over;
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<ecg::HrvSummary> summary;  // absent: fewer than 2 usable intervals
  int rejected_intervals = 0;
};

inline SessionResult analyze_segment(const Segment& seg, const ecg::DetectParams& params = {}) {
  SessionResult r{seg.source, seg.session_index, seg.kind, seg.outcome, seg.start_s, seg.end_s, std::nullopt, 0};
  r.summary = ecg::summarize(seg.trace, params, &r.rejected_intervals);
  return r;
}

inline std::vector<SessionResult> analyze_recording(const Recording& rec, const std::string& source = {},
                                                    const ecg::DetectParams& params = {}) {
  std::vector<SessionResult> out;
  for (const auto& seg : segment_by_markers(rec, source)) out.push_back(analyze_segment(seg, params));
  return out;
}

struct ConditionReport {
  SessionKind condition = SessionKind::rest;
  std::vector<SessionResult> sessions;  // sessions with a summary
  int flagged_sessions = 0;             // sessions without one
  double mean_hr_bpm = 0.0;
  std::optional<double> sd_hr_bpm;
  double mean_rmssd_ms = 0.0;
  std::optional<double> sd_rmssd_ms;

  std::vector<double> hr_values() const {
    std::vector<double> v;
    for (const auto& s : sessions) v.push_back(s.summary->hr_bpm);
    return v;
  }
  std::vector<double> rmssd_values() const {
    std::vector<double> v;
    for (const auto& s : sessions) v.push_back(s.summary->rmssd_ms);
    return v;
  }
};

inline constexpr std::array<SessionKind, 3> kConditions = {SessionKind::rest, SessionKind::easy, SessionKind::hard};

/// Per-condition mean and sample sd of per-session values. Conditions with no
/// usable session are left out.
inline std::vector<ConditionReport> aggregate(const std::vector<SessionResult>& results) {
  std::vector<ConditionReport> out;
  for (SessionKind kind : kConditions) {
    ConditionReport rep;
    rep.condition = kind;
    bool seen = false;
    for (const auto& r : results) {
      if (r.kind != kind) continue;
      seen = true;
      if (r.summary) {
        rep.sessions.push_back(r);
      } else {
        ++rep.flagged_sessions;
      }
    }
    if (!seen || rep.sessions.empty()) continue;
    const auto hr = rep.hr_values();
    const auto hrv = rep.rmssd_values();
    rep.mean_hr_bpm = stats::mean(hr);
    rep.mean_rmssd_ms = stats::mean(hrv);
    if (hr.size() >= 2) {
      rep.sd_hr_bpm = stats::sample_sd(hr);
      rep.sd_rmssd_ms = stats::sample_sd(hrv);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

inline const ConditionReport* find_condition(const std::vector<ConditionReport>& reps, SessionKind kind) {
  for (const auto& r : reps)
    if (r.condition == kind) return &r;
  return nullptr;
}

struct Comparison {
  std::string name;
  SessionKind group1;
  SessionKind group2;
  std::optional<stats::TTestResult> corrected;
  std::optional<stats::TTestResult> literal;
  std::string notice;  // why the test was skipped
};

inline constexpr std::array<std::pair<SessionKind, SessionKind>, 3> kComparisons = {
    std::pair{SessionKind::rest, SessionKind::hard}, std::pair{SessionKind::rest, SessionKind::easy},
    std::pair{SessionKind::easy, SessionKind::hard}};

/// One-tailed t-tests on per-session RMSSD for rest/hard, rest/easy and
/// easy/hard, in both standard-error modes.
inline std::vector<Comparison> compare_conditions(const std::vector<ConditionReport>& reps) {
  std::vector<Comparison> out;
  for (auto [a, b] : kComparisons) {
    Comparison c{std::string(to_string(a)) + "_vs_" + std::string(to_string(b)), a, b, {}, {}, {}};
    const auto* ra = find_condition(reps, a);
    const auto* rb = find_condition(reps, b);
    if (!ra || !rb) {
      c.notice = "skipped: no " + std::string(to_string(!ra ? a : b)) + " sessions";
    } else if (ra->sessions.size() < 2 || rb->sessions.size() < 2) {
      c.notice = "skipped: each condition needs at least 2 sessions";
    } else {
      const auto g1 = stats::summarize_group(std::string(to_string(a)), ra->rmssd_values());
      const auto g2 = stats::summarize_group(std::string(to_string(b)), rb->rmssd_values());
      try {
        c.corrected = stats::t_test(g1, g2, stats::SeMode::variance_corrected);
        c.literal = stats::t_test(g1, g2, stats::SeMode::paper_literal);
      } catch (const Error& e) {
        if (e.code() != Errc::DegenerateSE) throw;
        c.corrected.reset();
        c.literal.reset();
        c.notice = std::string("skipped: ") + e.what();
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

struct Report {
  std::vector<std::string> sources;
  stats::SeMode mode = stats::SeMode::variance_corrected;
  std::vector<SessionResult> sessions;
  std::vector<ConditionReport> conditions;
  std::vector<Comparison> comparisons;
};

inline Report build_report(std::vector<std::string> sources, std::vector<SessionResult> sessions,
                           stats::SeMode mode) {
  Report r;
  r.sources = std::move(sources);
  r.mode = mode;
  r.sessions = std::move(sessions);
  r.conditions = aggregate(r.sessions);
  r.comparisons = compare_conditions(r.conditions);
  return r;
}

// --- JSON --------------------------------------------------------------------

inline ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

inline ojson session_json(const SessionResult& s) {
  ojson j{{"source", s.source},
          {"session_index", s.session_index},
          {"kind", to_string(s.kind)},
          {"outcome", to_string(s.outcome)},
          {"start_s", s.start_s},
          {"end_s", s.end_s}};
  if (s.summary) {
    j["hr_bpm"] = s.summary->hr_bpm;
    j["rmssd_ms"] = s.summary->rmssd_ms;
    j["n_intervals"] = s.summary->n_intervals;
  } else {
    j["hr_bpm"] = nullptr;
    j["rmssd_ms"] = nullptr;
    j["n_intervals"] = 0;
  }
  j["rejected_intervals"] = s.rejected_intervals;
  j["flagged"] = !s.summary.has_value();
  return j;
}

inline ojson condition_json(const ConditionReport& c) {
  return ojson{{"condition", to_string(c.condition)},
               {"n_sessions", c.sessions.size()},
               {"flagged_sessions", c.flagged_sessions},
               {"mean_hr_bpm", c.mean_hr_bpm},
               {"sd_hr_bpm", opt_json(c.sd_hr_bpm)},
               {"mean_rmssd_ms", c.mean_rmssd_ms},
               {"sd_rmssd_ms", opt_json(c.sd_rmssd_ms)}};
}

inline ojson ttest_json(const stats::TTestResult& t) {
  return ojson{{"t_score", t.t_score},
               {"dof", t.dof},
               {"standard_error", t.standard_error},
               {"p_one_tailed", t.p_one_tailed}};
}

inline ojson comparison_json(const Comparison& c, stats::SeMode mode) {
  ojson j{{"comparison", c.name},
          {"group1", to_string(c.group1)},
          {"group2", to_string(c.group2)},
          {"metric", "rmssd_ms"}};
  if (!c.corrected) {
    j["skipped"] = true;
    j["notice"] = c.notice;
    return j;
  }
  j["skipped"] = false;
  j["formula_mode"] = to_string(mode);
  const auto& sel = mode == stats::SeMode::paper_literal ? *c.literal : *c.corrected;
  j["t_score"] = sel.t_score;
  j["dof"] = sel.dof;
  j["standard_error"] = sel.standard_error;
  j["p_one_tailed"] = sel.p_one_tailed;
  j["variance_corrected"] = ttest_json(*c.corrected);
  j["paper_literal"] = ttest_json(*c.literal);
  return j;
}

/// Single-object report.
inline ojson report_json(const Report& r) {
  ojson sessions = ojson::array(), conditions = ojson::array(), tests = ojson::array();
  for (const auto& s : r.sessions) sessions.push_back(session_json(s));
  for (const auto& c : r.conditions) conditions.push_back(condition_json(c));
  for (const auto& c : r.comparisons) tests.push_back(comparison_json(c, r.mode));
  ojson absent = ojson::array();
  for (SessionKind k : kConditions)
    if (!find_condition(r.conditions, k)) absent.push_back(to_string(k));
  return ojson{{"schema", "stresslab.report.v1"},
               {"sources", r.sources},
               {"stats_mode", to_string(r.mode)},
               {"sessions", sessions},
               {"conditions", conditions},
               {"absent_conditions", absent},
               {"t_tests", tests}};
}

/// Newline-delimited report: a header line, then one line per session,
/// condition and t-test, each tagged by "record".
inline std::string report_ndjson(const Report& r) {
  std::ostringstream os;
  auto line = [&](const char* kind, ojson body) {
    ojson j{{"record", kind}};
    for (auto& [k, v] : body.items()) j[k] = v;
    os << j.dump() << '\n';
  };
  const ojson full = report_json(r);
  line("header", ojson{{"schema", full["schema"]},
                       {"sources", full["sources"]},
                       {"stats_mode", full["stats_mode"]},
                       {"absent_conditions", full["absent_conditions"]}});
  for (const auto& s : full["sessions"]) line("session", s);
  for (const auto& c : full["conditions"]) line("condition", c);
  for (const auto& t : full["t_tests"]) line("t_test", t);
  return os.str();
}

}  // namespace stresslab::analysis
