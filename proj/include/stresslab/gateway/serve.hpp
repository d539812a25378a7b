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

// Live counterpart of cmd_simulate: same streams and output files, with the
// player replaced by a gateway client.

#pragma once

#include <functional>
#include <utility>

#include "stresslab/experiment.hpp"
#include "stresslab/gateway/server.hpp"

namespace stresslab::gateway {

struct ServeResult {
  session::ExperimentPlan plan;
  session::SessionLog log;
  Recording recording;
  experiment::SimulateOutput files;
};

inline session::ExperimentHooks chain(session::ExperimentHooks a, session::ExperimentHooks b) {
  session::ExperimentHooks h;
  h.on_tick = [a, b](double t) {
    if (a.on_tick) a.on_tick(t);
    if (b.on_tick) b.on_tick(t);
  };
  h.on_session_start = [a, b](const session::SessionSpec& s, double t, const game::BombState* bomb) {
    if (a.on_session_start) a.on_session_start(s, t, bomb);
    if (b.on_session_start) b.on_session_start(s, t, bomb);
  };
  h.on_session_end = [a, b](const session::SessionRecord& r) {
    if (a.on_session_end) a.on_session_end(r);
    if (b.on_session_end) b.on_session_end(r);
  };
  h.on_state = [a, b](const session::SessionSpec& s, const game::BombState& bomb) {
    if (a.on_state) a.on_state(s, bomb);
    if (b.on_state) b.on_state(s, bomb);
  };
  h.on_caption = [a, b](const keywords::CaptionEvent& c) {
    if (a.on_caption) a.on_caption(c);
    if (b.on_caption) b.on_caption(c);
  };
  return h;
}

/// Runs one participant live on an already listening server and writes the
/// recording and plan into cfg.out_dir. A null plan means build_plan for
/// participant 1.
inline ServeResult serve_participant(Server& server, const experiment::RunConfig& cfg,
                                     const session::ExperimentPlan* plan = nullptr) {
  experiment::validate(cfg);
  ServeResult res;
  const std::uint64_t seed = experiment::participant_seed(cfg, 1);
  res.plan = plan ? *plan : session::build_plan(cfg.participant(1), seed);
  session::validate_plan(res.plan, plan == nullptr);

  std::vector<keywords::TranscriptEvent> replay;
  if (cfg.transcript) replay = keywords::load_transcript(*cfg.transcript);
  const auto dict = experiment::dictionary_for(cfg);

  StreamHub hub;
  auto outlets = experiment::create_standard_outlets(hub, cfg.synth.sample_rate_hz);
  experiment::EcgStreamer streamer(cfg, seed, outlets.ecg, hub);
  session::ExperimentHooks ecg_hooks;
  ecg_hooks.on_session_start = [&](const session::SessionSpec& spec, double t, const game::BombState*) {
    streamer.session_started(spec.kind, t);
  };
  ecg_hooks.on_tick = [&](double t) { streamer.advance(t); };
  streamer.advance(0.0);

  res.log = server.run(res.plan, {&outlets.markers, &outlets.transcript, &dict},
                       chain(ecg_hooks, server.mirror_hooks(res.plan)), cfg.time_scale, std::move(replay));
  streamer.finish(res.log.aborted ? std::max(res.log.end_s, 0.0) : res.plan.scheduled_total_s());
  res.recording = hub.recording();

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) fail(Errc::IoError, "cannot create '" + cfg.out_dir.string() + "': " + ec.message());
  const auto rec_path = cfg.out_dir / (res.plan.participant_id + ".mrec");
  const auto plan_path = cfg.out_dir / (res.plan.participant_id + ".plan.ndjson");
  record_to_file(res.recording, rec_path);
  session::write_plan(res.plan, plan_path);
  res.files.recordings.push_back(rec_path);
  res.files.plans.push_back(plan_path);
  return res;
}

}  // namespace stresslab::gateway
