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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "stresslab/experiment.hpp"

using namespace stresslab;
using namespace stresslab::experiment;
using Catch::Matchers::ContainsSubstring;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ParseError;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("stresslab_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void apply(RunConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  apply_config(cfg, parse_key_values(is, "cfg"));
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("config file keys", "[experiment][config]") {
  RunConfig cfg;
  apply(cfg,
        "# defaults overridden\n"
        "seed = 42\n"
        "participants=3   # trailing comment\n"
        "\n"
        "easy.rmssd_ms = 35.5\n"
        "hard.error_prob = 0.2\n"
        "stats_mode = literal\n"
        "plots = yes\n"
        "format = ndjson\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.participants == 3);
  CHECK(cfg.easy.rmssd_ms == 35.5);
  CHECK(cfg.easy.hr_bpm == 82.0);
  REQUIRE(cfg.player.hard);
  CHECK(cfg.player.hard->error_prob == 0.2);
  CHECK(cfg.player.hard->reaction_delay_s == cfg.player.base.reaction_delay_s);
  CHECK_FALSE(cfg.player.easy);
  CHECK(cfg.stats_mode == stats::SeMode::paper_literal);
  CHECK(cfg.plots);
  CHECK(cfg.ndjson_report);

  CHECK(code_of([&] { apply(cfg, "colour = red\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { apply(cfg, "seed = many\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { apply(cfg, "rest.hr_bpm = 70bpm\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { apply(cfg, "plots = maybe\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { apply(cfg, "format = xml\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { apply(cfg, "stats_mode = welch\n"); }) == Errc::BadParameter);
  try {
    apply(cfg, "seed = 1\nno equals sign\n");
    FAIL("accepted a line without '='");
  } catch (const Error& e) {
    CHECK_THAT(e.what(), ContainsSubstring("cfg:2"));
  }
  CHECK(code_of([] { RunConfig c; load_config(c, "/nonexistent/run.cfg"); }) == Errc::IoError);
}

TEST_CASE("config validation", "[experiment][config]") {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return code_of([&] { validate(c); });
  };
  CHECK_NOTHROW(validate(RunConfig{}));
  CHECK(bad([](RunConfig& c) { c.participants = 0; }) == Errc::BadParameter);
  CHECK(bad([](RunConfig& c) { c.hard.hr_bpm = 10; }) == Errc::BadParameter);
  CHECK(bad([](RunConfig& c) { c.rest.rmssd_ms = -1; }) == Errc::BadParameter);
  CHECK(bad([](RunConfig& c) { c.synth.sample_rate_hz = 50; }) == Errc::BadParameter);
  CHECK(bad([](RunConfig& c) { c.time_scale = 0; }) == Errc::BadParameter);
  CHECK(bad([](RunConfig& c) { c.player.base.error_prob = 1.5; }) == Errc::BadParameter);
}

TEST_CASE("participant ids and seeds", "[experiment]") {
  RunConfig cfg;
  cfg.participants = 1;
  CHECK(cfg.participant(1) == "P");
  CHECK(participant_seed(cfg, 1) == cfg.seed);
  cfg.participants = 3;
  CHECK(cfg.participant(2) == "P2");
  CHECK(participant_seed(cfg, 1) != participant_seed(cfg, 2));
}

TEST_CASE("a simulated participant yields a well-formed recording", "[experiment][slow]") {
  RunConfig cfg;
  const auto run = simulate_participant(cfg, 1);
  const auto& rec = run.recording;

  REQUIRE(rec.decls().size() == 3);
  const auto* ecg = rec.find_decl(kEcgStream);
  REQUIRE(ecg);
  std::size_t samples = 0;
  for (const auto& c : rec.chunks(kEcgStream)) samples += c.sample_count();
  CHECK(samples == static_cast<std::size_t>(run.plan.scheduled_total_s() * 250.0));
  CHECK(rec.offsets(kEcgStream).size() >= 200);
  for (const auto& o : rec.offsets(kEcgStream)) CHECK(std::abs(o.offset_s - cfg.device_clock_offset_s) <= o.uncertainty_s());

  int starts = 0, ends = 0;
  for (const auto& m : rec.markers(kMarkerStream)) {
    REQUIRE(parse_marker(m.label));
    starts += m.label.rfind("session_start:", 0) == 0;
    ends += m.label.rfind("session_end:", 0) == 0;
  }
  CHECK(starts == 16);
  CHECK(ends == 16);

  const auto segs = analysis::segment_by_markers(rec);
  REQUIRE(segs.size() == run.plan.sessions.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].session_index == run.plan.sessions[i].index);
    CHECK(segs[i].kind == run.plan.sessions[i].kind);
    CHECK(segs[i].start_s == Catch::Approx(run.log.sessions[i].start_s).margin(1e-9));
    CHECK(segs[i].trace.start_timestamp_s - segs[i].start_s < 1.0 / 250.0 + 1e-6);
  }

  // Peaks found in the first rest slice line up with the synthesizer's beats.
  std::vector<double> truth;
  for (double t : run.true_peaks_s)
    if (t > segs[0].start_s + 0.05 && t < segs[0].end_s - 0.05) truth.push_back(t);
  const auto found = ecg::detect_r_peaks(segs[0].trace).peak_times_s;
  const auto m = oracle::match_peaks(truth, found, 0.004);
  CHECK(m.matched == truth.size());
  CHECK(found.size() == truth.size());
}

TEST_CASE("simulation is deterministic per seed", "[experiment][slow]") {
  RunConfig cfg;
  cfg.seed = 9;
  const auto a = simulate_participant(cfg, 1);
  const auto b = simulate_participant(cfg, 1);
  CHECK(a.plan == b.plan);
  CHECK(a.recording == b.recording);
  CHECK(serialize_recording(a.recording) == serialize_recording(b.recording));
  const auto c = simulate_participant(cfg, 2);
  CHECK_FALSE(a.recording == c.recording);
}

TEST_CASE("simulate and analyze through files", "[experiment][io][slow]") {
  TempDir dir("pipeline");
  RunConfig cfg;
  cfg.out_dir = dir.path / "rec";
  const auto sim = cmd_simulate(cfg);
  REQUIRE(sim.recordings.size() == 2);
  REQUIRE(sim.plans.size() == 2);
  for (const auto& p : sim.recordings) CHECK(fs::exists(p));
  CHECK(sim.recordings[0].filename() == "P1.mrec");
  const auto plans = session::load_plans(sim.plans[1]);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].participant_id == "P2");

  cfg.out_dir = dir.path / "report";
  cfg.plots = true;
  const auto out = cmd_analyze(sim.recordings, cfg);
  CHECK(out.report_path.filename() == "report.json");
  CHECK(out.report.sessions.size() == 32);
  REQUIRE(out.report.conditions.size() == 3);
  CHECK(out.report.conditions[0].sessions.size() == 16);
  CHECK(out.report.conditions[1].sessions.size() == 8);
  CHECK(out.report.conditions[2].sessions.size() == 8);
  REQUIRE(out.report.comparisons.size() == 3);
  for (const auto& c : out.report.comparisons) {
    CHECK(c.corrected);
    CHECK(c.corrected->dof == (c.group1 == SessionKind::rest ? 22 : 14));
  }
  const auto first = slurp(out.report_path);
  const auto j = ojson::parse(first);
  CHECK(j["sources"] == ojson::array({"P1", "P2"}));
  CHECK(j["absent_conditions"].empty());

  REQUIRE(out.plots.size() == 4);
  const auto bars = slurp(dir.path / "report" / "hrv_bars.svg");
  CHECK(count(bars, "class=\"bar\"") == 3);
  CHECK(count(bars, "class=\"error\"") == 3);
  const auto ov = slurp(dir.path / "report" / "overlay_P1.svg");
  CHECK(count(ov, "class=\"marker\"") >= 32);

  const auto again = cmd_analyze(sim.recordings, cfg);
  CHECK(slurp(again.report_path) == first);
  CHECK(slurp(dir.path / "report" / "hrv_bars.svg") == bars);

  cfg.ndjson_report = true;
  const auto nd = cmd_analyze(sim.recordings, cfg);
  CHECK(nd.report_path.filename() == "report.ndjson");
  CHECK(count(slurp(nd.report_path), "\n") == 1 + 32 + 3 + 3);

  CHECK(code_of([&] { cmd_analyze({}, cfg); }) == Errc::BadParameter);
  CHECK(code_of([&] { cmd_analyze({dir.path / "missing.mrec"}, cfg); }) == Errc::IoError);
}

TEST_CASE("transcript replay reaches the recording and the overlay", "[experiment][captions][slow]") {
  TempDir dir("captions");
  const fs::path tr = dir.path / "talk.ndjson";
  {
    std::ofstream os(tr);
    os << R"({"timestamp_s": 65.0, "text": "Cut the RED wire now"})" << '\n'
       << R"({"timestamp_s": 3.0, "text": "nothing to see"})" << '\n';
  }
  RunConfig cfg;
  cfg.participants = 1;
  cfg.transcript = tr;
  cfg.out_dir = dir.path / "rec";
  const auto sim = cmd_simulate(cfg);
  REQUIRE(sim.recordings.size() == 1);
  CHECK(sim.recordings[0].filename() == "P.mrec");
  const auto rec = load_recording(sim.recordings[0]);

  const auto text = rec.markers(kTranscriptStream);
  REQUIRE(text.size() == 2);
  CHECK(text[0].label == "nothing to see");
  CHECK(text[1].label == "Cut the RED wire now");

  std::vector<std::string> captions;
  for (const auto& m : rec.markers(kMarkerStream))
    if (m.label.rfind("caption:", 0) == 0) captions.push_back(m.label);
  CHECK(captions == std::vector<std::string>{"caption:cut", "caption:red", "caption:wire"});

  cfg.out_dir = dir.path / "report";
  cfg.plots = true;
  cmd_analyze(sim.recordings, cfg);
  const auto ov = slurp(dir.path / "report" / "overlay_P.svg");
  CHECK(count(ov, "class=\"caption\"") == 3);
  CHECK_THAT(ov, ContainsSubstring(">wire</text>"));
}
