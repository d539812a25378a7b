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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and time budgets are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "game_play.hpp"
#include "oracles.hpp"
#include "stresslab/stresslab.hpp"

using namespace stresslab;
namespace fs = std::filesystem;

namespace {

constexpr double kRmssdRelTol = 1e-9;
constexpr double kRmssdBudgetS = 5.0;
constexpr double kPeakTolS = 0.004;
constexpr double kPeakBudgetS = 30.0;
constexpr double kTargetRelTol = 0.05;
constexpr int kSeeds = 20;
constexpr int kSeedsRequired = 19;
constexpr double kAlpha = 0.05;
constexpr double kEndToEndBudgetS = 60.0;
constexpr double kCdfTol = 1e-6;
constexpr double kCriticalTol = 0.001;
constexpr int kBombsPerRow = 1000;
constexpr double kRandomFailRate = 0.95;
constexpr int kCasings = 1000;

struct Line {
  bool pass;
  std::string detail;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- RMSSD -------------------------------------------------------------------

Line rmssd_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20260301);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> rr(static_cast<std::size_t>(rng.between(2, 500)));
    for (double& x : rr) x = rng.uniform(300.0, 2000.0);
    const double ref = oracle::rmssd(rr);
    const double got = ecg::rmssd(rr);
    worst = std::max(worst, ref == 0.0 ? std::fabs(got) : std::fabs(got - ref) / ref);
  }
  const bool examples = ecg::rmssd(std::vector<double>{1000, 1000, 1000}) == 0.0 &&
                        ecg::rmssd(std::vector<double>{800, 820, 800, 820}) == 20.0 &&
                        ecg::rmssd(std::vector<double>{1000, 1040}) == 40.0;
  const double dt = seconds_since(t0);
  return {worst <= kRmssdRelTol && examples && dt < kRmssdBudgetS,
          fmt("1000 series, max rel err %.2e (tol %.0e); examples 0/20/40 %s; %.2f s (budget %.0f s)", worst,
              kRmssdRelTol, examples ? "exact" : "WRONG", dt, kRmssdBudgetS),
          {}};
}

// --- peaks -------------------------------------------------------------------

Line peak_detection() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4242);
  double min_precision = 1.0, min_recall = 1.0, worst_dt = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double hr = rng.uniform(60.0, 100.0);
    const double hrv = rng.uniform(20.0, 60.0);
    const auto syn = ecg::synthesize_ecg(300.0, hr, hrv, 1000 + static_cast<std::uint64_t>(k));
    const auto found = ecg::detect_r_peaks(syn.trace).peak_times_s;
    const auto& truth = syn.ground_truth.peak_times_s;
    const auto m = oracle::match_peaks(truth, found, kPeakTolS);
    const double precision = found.empty() ? 0.0 : static_cast<double>(m.matched) / static_cast<double>(found.size());
    const double recall = static_cast<double>(m.matched) / static_cast<double>(truth.size());
    min_precision = std::min(min_precision, precision);
    min_recall = std::min(min_recall, recall);
    worst_dt = std::max(worst_dt, m.max_abs_error_s);
  }
  const double dt = seconds_since(t0);
  return {min_precision == 1.0 && min_recall == 1.0 && dt < kPeakBudgetS,
          fmt("20 traces x 300 s @ 250 Hz: min precision %.4f, min recall %.4f, max |dt| %.2f ms (tol %.0f ms); "
              "%.2f s (budget %.0f s)",
              min_precision, min_recall, worst_dt * 1000.0, kPeakTolS * 1000.0, dt, kPeakBudgetS),
          {}};
}

// --- end to end --------------------------------------------------------------

struct SimRun {
  session::ExperimentPlan plan;
  Recording recording;
};

const analysis::ConditionReport& cond(const analysis::Report& r, SessionKind k) {
  const auto* c = analysis::find_condition(r.conditions, k);
  if (!c) fail(Errc::MissingStream, "no " + std::string(to_string(k)) + " sessions");
  return *c;
}

bool ordering_holds(const analysis::Report& r) {
  const auto& rest = cond(r, SessionKind::rest);
  const auto& easy = cond(r, SessionKind::easy);
  const auto& hard = cond(r, SessionKind::hard);
  return hard.mean_rmssd_ms < easy.mean_rmssd_ms && easy.mean_rmssd_ms < rest.mean_rmssd_ms &&
         hard.mean_hr_bpm > rest.mean_hr_bpm && rest.mean_hr_bpm >= easy.mean_hr_bpm;
}

std::optional<double> easy_vs_hard_p(const analysis::Report& r) {
  for (const auto& c : r.comparisons)
    if (c.group1 == SessionKind::easy && c.group2 == SessionKind::hard && c.corrected)
      return c.corrected->p_one_tailed;
  return std::nullopt;
}

// Largest relative deviation of recovered condition means from the targets.
double worst_target_error(const analysis::Report& r, const experiment::RunConfig& cfg, std::string* where) {
  double worst = 0.0;
  for (SessionKind k : analysis::kConditions) {
    const auto& c = cond(r, k);
    const auto& target = cfg.condition(k);
    const double e_hr = (c.mean_hr_bpm - target.hr_bpm) / target.hr_bpm;
    const double e_hrv = (c.mean_rmssd_ms - target.rmssd_ms) / target.rmssd_ms;
    if (where) {
      *where += fmt("%s HR %.2f/%.0f (%+.1f%%) RMSSD %.2f/%.0f (%+.1f%%); ", std::string(to_string(k)).c_str(),
                    c.mean_hr_bpm, target.hr_bpm, 100.0 * e_hr, c.mean_rmssd_ms, target.rmssd_ms, 100.0 * e_hrv);
    }
    worst = std::max({worst, std::fabs(e_hr), std::fabs(e_hrv)});
  }
  return worst;
}

Line end_to_end(std::vector<SimRun>& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  Line line{true, {}, {}};

  // Defaults through the command functions and the file formats.
  const experiment::RunConfig defaults;
  const fs::path work = fs::temp_directory_path() / "stresslab_acceptance";
  fs::remove_all(work);
  experiment::RunConfig cfg = defaults;
  cfg.out_dir = work / "sim";
  const auto sim = experiment::cmd_simulate(cfg);
  cfg.out_dir = work / "analysis";
  const auto out = experiment::cmd_analyze(sim.recordings, cfg);
  std::string detail;
  const double worst = worst_target_error(out.report, defaults, &detail);
  const bool within = worst <= kTargetRelTol;
  line.notes.push_back(fmt("seed %llu targets within %.0f%%: %s (worst %.1f%%): %s",
                           static_cast<unsigned long long>(defaults.seed), 100.0 * kTargetRelTol,
                           within ? "yes" : "NO", 100.0 * worst, detail.c_str()));
  fs::remove_all(work);

  int ordered = 0, significant = 0, within_seeds = 0;
  std::string misses;
  for (int s = 1; s <= kSeeds; ++s) {
    experiment::RunConfig c = defaults;
    c.seed = static_cast<std::uint64_t>(s);
    std::vector<std::pair<std::string, Recording>> recs;
    for (int n = 1; n <= c.participants; ++n) {
      auto run = experiment::simulate_participant(c, n);
      recs.emplace_back(run.plan.participant_id, run.recording);
      runs.push_back({std::move(run.plan), std::move(run.recording)});
    }
    const auto report = experiment::analyze_recordings(recs, c.stats_mode);
    const bool ok = ordering_holds(report);
    const auto p = easy_vs_hard_p(report);
    ordered += ok;
    significant += p && *p < kAlpha;
    within_seeds += worst_target_error(report, c, nullptr) <= kTargetRelTol;
    if (!ok || !p || *p >= kAlpha) misses += fmt(" seed %d (ordering %s, p=%.4f)", s, ok ? "ok" : "broken", p ? *p : 1.0);
  }
  const double dt = seconds_since(t0);
  line.pass = within && ordered >= kSeedsRequired && significant >= kSeedsRequired && dt < kEndToEndBudgetS;
  line.detail = fmt("targets within %.0f%% on seed %llu: %s; ordering %d/%d; easy<hard p<%.2f %d/%d (need %d); "
                    "%.1f s (budget %.0f s)",
                    100.0 * kTargetRelTol, static_cast<unsigned long long>(defaults.seed), within ? "yes" : "NO",
                    ordered, kSeeds, kAlpha, significant, kSeeds, kSeedsRequired, dt, kEndToEndBudgetS);
  line.notes.push_back(fmt("seeds 1..%d with every target within %.0f%%: %d/%d", kSeeds, 100.0 * kTargetRelTol,
                           within_seeds, kSeeds));
  if (!misses.empty()) line.notes.push_back("misses:" + misses);
  return line;
}

// --- statistics --------------------------------------------------------------

Line statistics() {
  bool zero_ok = true;
  for (int d = 1; d <= 30; ++d) zero_ok = zero_ok && std::fabs(stats::student_t_sf(0.0, d) - 0.5) < 1e-15;
  const double crit = stats::student_t_sf(1.761, 14);
  const bool crit_ok = std::fabs(crit - 0.05) <= kCriticalTol;

  double worst = 0.0;
  for (int d = 1; d <= 30; ++d)
    for (int i = 0; i <= 100; ++i) {
      const double t = 0.1 * i;
      const double ref = 0.5 - oracle::t_mass_0_to(t, d, 20000);
      worst = std::max(worst, std::fabs(stats::student_t_sf(t, d) - ref));
    }

  stats::GroupSummary g;
  g.sd = 4.0;
  g.n = 8;
  const double literal = stats::standard_error(g, g, stats::SeMode::paper_literal);
  const double corrected = stats::standard_error(g, g, stats::SeMode::variance_corrected);
  const bool modes_ok = literal == 1.0 && corrected == 2.0;

  return {zero_ok && crit_ok && worst <= kCdfTol && modes_ok,
          fmt("p(0,d)=0.5 for d=1..30: %s; p(1.761,14)=%.5f (0.050 +- %.3f); max |p - quadrature| %.2e over "
              "d=1..30, t=0..10 (tol %.0e); SE sd=4,N=8 literal %.3f corrected %.3f",
              zero_ok ? "yes" : "NO", crit, kCriticalTol, worst, kCdfTol, literal, corrected),
          {}};
}

// --- game --------------------------------------------------------------------

Line game_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (auto d : {game::Difficulty::easy5min, game::Difficulty::medium, game::Difficulty::hard90s}) {
    int defused = 0, strikes = 0;
    for (int s = 1; s <= kBombsPerRow; ++s) {
      const auto out = testplay::play_oracle(game::generate_bomb(static_cast<std::uint64_t>(s), d));
      defused += out.final.terminal == game::Terminal::defused;
      strikes += out.strikes();
    }
    ok = ok && defused == kBombsPerRow && strikes == 0;
    detail += fmt("%s oracle %d/%d defused, %d strikes; ", std::string(game::to_string(d)).c_str(), defused,
                  kBombsPerRow, strikes);
  }
  int failed = 0;
  for (int s = 1; s <= kBombsPerRow; ++s) {
    const auto cfg = game::generate_bomb(static_cast<std::uint64_t>(s), game::Difficulty::hard90s);
    failed += testplay::play_random(cfg, derive_seed(static_cast<std::uint64_t>(s), 77)).final.terminal !=
              game::Terminal::defused;
  }
  const double rate = static_cast<double>(failed) / kBombsPerRow;
  ok = ok && rate > kRandomFailRate;
  detail += fmt("random player at hard90s fails %.1f%% (need > %.0f%%); %.1f s", 100.0 * rate,
                100.0 * kRandomFailRate, seconds_since(t0));
  return {ok, detail, {}};
}

// --- markers -----------------------------------------------------------------

// Empty string when the recording satisfies every invariant, else the first
// violation.
std::string marker_violation(const SimRun& run) {
  const auto& rec = run.recording;
  const auto markers = rec.markers(experiment::kMarkerStream);
  const auto& plan = run.plan;
  double last_t = -1e300;
  std::size_t next = 0;
  double planned_end = 0.0, prev_end = 0.0;
  bool is_open = false;
  marker::SessionStart open{};
  double open_at = 0.0;
  for (const auto& m : markers) {
    if (m.timestamp_s < last_t) return "timestamps go backwards at '" + m.label + "'";
    last_t = m.timestamp_s;
    const auto parsed = parse_marker(m.label);
    if (!parsed) return "unparseable '" + m.label + "'";
    if (const auto* s = std::get_if<marker::SessionStart>(&*parsed)) {
      if (is_open) return "nested session start";
      if (next >= plan.sessions.size()) return "more sessions than planned";
      const auto& spec = plan.sessions[next];
      if (s->index != spec.index || s->kind != spec.kind) return "session out of plan order";
      if (std::fabs(m.timestamp_s - prev_end) > 1e-9) return "gap before session " + std::to_string(s->index);
      open = *s;
      is_open = true;
      open_at = m.timestamp_s;
      planned_end += spec.duration_s;
    } else if (const auto* e = std::get_if<marker::SessionEnd>(&*parsed)) {
      if (!is_open || open.index != e->index || open.kind != e->kind) return "unmatched '" + m.label + "'";
      const auto& spec = plan.sessions[next];
      if (e->kind == SessionKind::rest) {
        if (e->outcome != SessionOutcome::rest_over) return "rest with a task outcome";
        if (std::fabs(m.timestamp_s - planned_end) > 0.011) return "rest does not end on the planned schedule";
      } else {
        if (e->outcome == SessionOutcome::rest_over) return "task ends as rest_over";
        if (m.timestamp_s - open_at > spec.duration_s + 0.011) return "task overruns its limit";
      }
      prev_end = m.timestamp_s;
      is_open = false;
      ++next;
    } else if (!std::holds_alternative<marker::Caption>(*parsed)) {
      if (!is_open || open.kind == SessionKind::rest) return "game event outside a task: '" + m.label + "'";
    }
  }
  if (is_open) return "session never ends";
  if (next != plan.sessions.size()) return "fewer sessions than planned";
  if (prev_end > plan.scheduled_total_s() + 1e-9) return "run exceeds the schedule";

  const auto* ecg = rec.find_decl(experiment::kEcgStream);
  if (!ecg) return "no ECG stream";
  std::size_t samples = 0;
  for (const auto& c : rec.chunks(experiment::kEcgStream)) samples += c.sample_count();
  if (samples != static_cast<std::size_t>(std::llround(plan.scheduled_total_s() * ecg->nominal_rate_hz)))
    return "ECG does not cover the schedule";

  const std::string text = serialize_recording(rec);
  const Recording back = parse_recording(text);
  if (!(back == rec)) return "round-trip changes the recording";
  if (serialize_recording(back) != text) return "round-trip is not byte-stable";
  return {};
}

Line marker_integrity(const std::vector<SimRun>& runs) {
  int bad = 0;
  std::string first;
  for (const auto& r : runs) {
    const auto v = marker_violation(r);
    if (!v.empty()) {
      ++bad;
      if (first.empty()) first = r.plan.participant_id + ": " + v;
    }
  }
  return {bad == 0 && !runs.empty(),
          fmt("%zu recordings checked (nesting, monotonicity, plan accounting, byte-stable round-trip); %d bad%s%s",
              runs.size(), bad, first.empty() ? "" : "; first: ", first.c_str()),
          {}};
}

// --- keywords ----------------------------------------------------------------

Line keyword_filter() {
  const auto dict = keywords::default_dictionary();
  const std::string utterance = "um, it's a white button";
  const auto words = keywords::filter_text(dict, utterance);
  const bool example = words == std::vector<std::string>{"white", "button"};
  Rng rng(9);
  int stable = 0;
  for (int k = 0; k < kCasings; ++k) {
    std::string s = utterance;
    for (char& c : s)
      if (rng.bernoulli(0.5)) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    stable += keywords::filter_text(dict, s) == words;
  }
  return {example && stable == kCasings,
          fmt("\"%s\" -> [%s]; %d/%d random casings identical", utterance.c_str(),
              [&] {
                std::string j;
                for (const auto& w : words) j += (j.empty() ? "" : ", ") + w;
                return j;
              }()
                  .c_str(),
              stable, kCasings),
          {}};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Line()>& fn) {
    Line line;
    try {
      line = fn();
    } catch (const std::exception& e) {
      line = {false, std::string("error: ") + e.what(), {}};
    }
    std::printf("%s %-22s %s\n", line.pass ? "PASS" : "FAIL", name, line.detail.c_str());
    for (const auto& n : line.notes) std::printf("     %-22s %s\n", "", n.c_str());
    std::fflush(stdout);
    failures += !line.pass;
  };

  std::vector<SimRun> runs;
  report("rmssd_oracle", rmssd_oracle);
  report("peak_detection", peak_detection);
  report("end_to_end", [&] { return end_to_end(runs); });
  report("statistics", statistics);
  report("game_soundness", game_soundness);
  report("marker_integrity", [&] { return marker_integrity(runs); });
  report("keyword_filter", keyword_filter);
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
