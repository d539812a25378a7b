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

// Experiment schedule (rest / easy / hard sessions), players, and the driver
// that runs a plan against the game engine while emitting session markers.

#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "stresslab/error.hpp"
#include "stresslab/game/bomb.hpp"
#include "stresslab/game/oracle.hpp"
#include "stresslab/keywords.hpp"
#include "stresslab/markers.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab::session {

using game::BombConfig;
using game::BombState;
using game::GameEvent;
using game::GameEventKind;
using game::PlayerAction;

// --- plan --------------------------------------------------------------------

inline constexpr double kRestDurationS = 60.0;
inline constexpr double kEasyDurationS = 120.0;
inline constexpr double kHardDurationS = 20.0;
inline constexpr int kTasksPerKind = 4;
inline constexpr int kTicksPerSecond = 100;

inline constexpr double duration_of(SessionKind kind) {
  switch (kind) {
    case SessionKind::rest: return kRestDurationS;
    case SessionKind::easy: return kEasyDurationS;
    case SessionKind::hard: return kHardDurationS;
  }
  return 0.0;
}

struct SessionSpec {
  int index = 0;
  SessionKind kind = SessionKind::rest;
  double duration_s = 0.0;
  std::uint64_t bomb_seed = 0;

  bool operator==(const SessionSpec&) const = default;
};

struct ExperimentPlan {
  std::string participant_id;
  std::uint64_t seed = 0;
  std::vector<SessionSpec> sessions;

  double scheduled_total_s() const {
    double total = 0.0;
    for (const auto& s : sessions) total += s.duration_s;
    return total;
  }
  int count(SessionKind kind) const {
    return static_cast<int>(std::count_if(sessions.begin(), sessions.end(),
                                          [&](const SessionSpec& s) { return s.kind == kind; }));
  }

  bool operator==(const ExperimentPlan&) const = default;
};

/// 8 x (rest, task); the tasks are a seeded shuffle of 4 easy and 4 hard.
inline ExperimentPlan build_plan(std::string participant_id, std::uint64_t seed) {
  ExperimentPlan plan{std::move(participant_id), seed, {}};
  std::vector<SessionKind> tasks;
  for (int i = 0; i < kTasksPerKind; ++i) tasks.push_back(SessionKind::easy);
  for (int i = 0; i < kTasksPerKind; ++i) tasks.push_back(SessionKind::hard);
  Rng order(derive_seed(seed, 0x5EED));
  order.shuffle(std::span<SessionKind>(tasks));
  Rng bombs(derive_seed(seed, 0xB0AB));
  int index = 1;
  for (SessionKind task : tasks) {
    plan.sessions.push_back({index++, SessionKind::rest, kRestDurationS, 0});
    plan.sessions.push_back({index++, task, duration_of(task), bombs.next_u64()});
  }
  return plan;
}

/// Structural checks. strict additionally requires the full 4/4/8 schedule.
inline void validate_plan(const ExperimentPlan& plan, bool strict = true) {
  if (plan.sessions.empty()) fail(Errc::BadPlan, "plan has no sessions");
  for (std::size_t i = 0; i < plan.sessions.size(); ++i) {
    const auto& s = plan.sessions[i];
    const std::string where = "session " + std::to_string(i + 1);
    if (s.index != static_cast<int>(i) + 1) fail(Errc::BadPlan, where + ": index must be " + std::to_string(i + 1));
    if (s.duration_s != duration_of(s.kind))
      fail(Errc::BadPlan, where + ": " + std::string(to_string(s.kind)) + " lasts " +
                              std::to_string(duration_of(s.kind)) + " s");
    if (s.kind != SessionKind::rest && (i == 0 || plan.sessions[i - 1].kind != SessionKind::rest))
      fail(Errc::BadPlan, where + ": task session not preceded by a rest session");
  }
  if (strict && (plan.count(SessionKind::rest) != 2 * kTasksPerKind ||
                 plan.count(SessionKind::easy) != kTasksPerKind ||
                 plan.count(SessionKind::hard) != kTasksPerKind))
    fail(Errc::BadPlan, "plan must have 8 rest, 4 easy and 4 hard sessions");
}

inline game::Difficulty difficulty_of(SessionKind kind) {
  return kind == SessionKind::hard ? game::Difficulty::hard_session : game::Difficulty::easy_session;
}

inline BombConfig bomb_for(const SessionSpec& spec) {
  if (spec.kind == SessionKind::rest) fail(Errc::BadPlan, "rest sessions have no bomb");
  return game::generate_bomb(spec.bomb_seed, difficulty_of(spec.kind));
}

inline nlohmann::ordered_json plan_to_json(const ExperimentPlan& plan) {
  nlohmann::ordered_json sessions = nlohmann::ordered_json::array();
  for (const auto& s : plan.sessions)
    sessions.push_back({{"index", s.index},
                        {"kind", to_string(s.kind)},
                        {"duration_s", s.duration_s},
                        {"bomb_seed", s.bomb_seed}});
  return {{"participant_id", plan.participant_id}, {"seed", plan.seed}, {"sessions", sessions}};
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  try {
    ExperimentPlan plan;
    plan.participant_id = j.at("participant_id").get<std::string>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("sessions")) {
      auto kind = parse_session_kind(s.at("kind").get<std::string>());
      if (!kind) fail(Errc::ParseError, "unknown session kind");
      plan.sessions.push_back({s.at("index").get<int>(), *kind, s.at("duration_s").get<double>(),
                               s.at("bomb_seed").get<std::uint64_t>()});
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("plan: ") + e.what());
  }
}

/// Plan files hold one plan object per line.
inline void write_plan(const ExperimentPlan& plan, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot write '" + path.string() + "'");
  os << plan_to_json(plan).dump() << '\n';
  if (!os) fail(Errc::IoError, "write to '" + path.string() + "' failed");
}

inline std::vector<ExperimentPlan> load_plans(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::IoError, "cannot open '" + path.string() + "'");
  std::vector<ExperimentPlan> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(plan_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::ParseError, std::string("plan file: ") + e.what());
    }
  }
  return out;
}

// --- players -----------------------------------------------------------------

/// Experiment-time stamped inputs from a player.
struct TimedAction {
  double at_s = 0.0;
  PlayerAction action;
};
struct TimedTranscript {
  double at_s = 0.0;
  std::string text;
};
using Inbound = std::variant<TimedAction, TimedTranscript>;

inline double inbound_time(const Inbound& in) {
  return std::visit([](const auto& v) { return v.at_s; }, in);
}

class Player {
 public:
  virtual ~Player() = default;
  virtual void begin_session(const SessionSpec& spec, double start_s) = 0;
  /// Inputs stamped at or before now_s. bomb is null during rest sessions.
  virtual std::vector<Inbound> poll(const BombState* bomb, double session_start_s, double now_s) = 0;
  virtual bool connected() const { return true; }
  /// An action the engine refused (unknown module, malformed detail, no bomb).
  virtual void rejected(const TimedAction&, const Error&) {}
};

struct PlayerParams {
  double reaction_delay_s = 10.0;
  double error_prob = 0.05;
};

struct SimulatedPlayerConfig {
  PlayerParams base;
  std::optional<PlayerParams> easy;
  std::optional<PlayerParams> hard;
  std::uint64_t seed = 1;

  const PlayerParams& params_for(SessionKind kind) const {
    if (kind == SessionKind::easy && easy) return *easy;
    if (kind == SessionKind::hard && hard) return *hard;
    return base;
  }
};

inline void validate(const PlayerParams& p) {
  if (!(p.reaction_delay_s > 0.0)) fail(Errc::BadParameter, "reaction_delay_s must be positive");
  if (!(p.error_prob >= 0.0 && p.error_prob <= 1.0)) fail(Errc::BadParameter, "error_prob must be in [0, 1]");
}

/// One action per reaction delay. Each turn is either a mistake (with
/// probability error_prob: a uniformly random available action) or the
/// oracle's next move. Open vent prompts are answered before anything else.
class SimulatedPlayer : public Player {
 public:
  explicit SimulatedPlayer(SimulatedPlayerConfig cfg) : cfg_(std::move(cfg)), rng_(derive_seed(cfg_.seed, 0x9A7E)) {
    validate(cfg_.base);
    if (cfg_.easy) validate(*cfg_.easy);
    if (cfg_.hard) validate(*cfg_.hard);
  }

  void begin_session(const SessionSpec& spec, double start_s) override {
    params_ = cfg_.params_for(spec.kind);
    next_due_ = start_s + params_.reaction_delay_s;
    decided_ = false;
  }

  std::vector<Inbound> poll(const BombState* bomb, double session_start_s, double now_s) override {
    if (!bomb || bomb->is_terminal() || now_s < next_due_) return {};
    if (!decided_) {
      mistake_ = rng_.bernoulli(params_.error_prob);
      decided_ = true;
    }
    std::optional<PlayerAction> act = mistake_ ? random_action(*bomb) : best_action(*bomb, now_s - session_start_s);
    if (!act) return {};
    decided_ = false;
    next_due_ = now_s + params_.reaction_delay_s;
    return {TimedAction{now_s, std::move(*act)}};
  }

  static std::optional<PlayerAction> best_action(const BombState& bomb, double bomb_t) {
    for (const auto& m : bomb.modules)
      if (m.progress.open_prompt) return PlayerAction{m.spec.module_id, "answer:Y"};
    for (const auto& m : bomb.modules)
      if (!m.spec.needy() && !m.solved()) return game::next_oracle_action(m, bomb, bomb_t);
    return std::nullopt;
  }

 private:
  std::optional<PlayerAction> random_action(const BombState& bomb) {
    auto acts = game::available_actions(bomb);
    if (acts.empty()) return std::nullopt;
    return acts[static_cast<std::size_t>(rng_.below(acts.size()))];
  }

  SimulatedPlayerConfig cfg_;
  Rng rng_;
  PlayerParams params_;
  double next_due_ = 0.0;
  bool decided_ = false;
  bool mistake_ = false;
};

/// Player fed from another thread (the gateway). Inputs are stamped with the
/// experiment clock when they are pushed and handed out in push order.
class LivePlayer : public Player {
 public:
  using Stamp = std::function<double()>;
  using RejectFn = std::function<void(const TimedAction&, const Error&)>;

  explicit LivePlayer(Stamp now) : now_(std::move(now)) {}

  void set_reject_handler(RejectFn fn) {
    std::lock_guard lock(mu_);
    on_reject_ = std::move(fn);
  }

  void push_action(PlayerAction action) {
    std::lock_guard lock(mu_);
    queue_.push_back(TimedAction{stamp_locked(), std::move(action)});
  }
  void push_transcript(std::string text) {
    std::lock_guard lock(mu_);
    queue_.push_back(TimedTranscript{stamp_locked(), std::move(text)});
  }
  void disconnect() {
    std::lock_guard lock(mu_);
    connected_ = false;
  }

  void begin_session(const SessionSpec&, double) override {}

  std::vector<Inbound> poll(const BombState*, double, double now_s) override {
    std::lock_guard lock(mu_);
    std::vector<Inbound> out;
    while (!queue_.empty() && inbound_time(queue_.front()) <= now_s) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    return out;
  }

  bool connected() const override {
    std::lock_guard lock(mu_);
    return connected_;
  }

  void rejected(const TimedAction& a, const Error& e) override {
    RejectFn fn;
    {
      std::lock_guard lock(mu_);
      fn = on_reject_;
    }
    if (fn) fn(a, e);
  }

 private:
  // Stamps never decrease even if the clock source jitters.
  double stamp_locked() {
    last_stamp_ = std::max(last_stamp_, now_());
    return last_stamp_;
  }

  Stamp now_;
  mutable std::mutex mu_;
  std::deque<Inbound> queue_;
  RejectFn on_reject_;
  double last_stamp_ = 0.0;
  bool connected_ = true;
};

// --- clocks ------------------------------------------------------------------

class Clock {
 public:
  virtual ~Clock() = default;
  /// Blocks until experiment time t has been reached.
  virtual void wait_until(double t) = 0;
  virtual double now() const = 0;
};

/// Logical time: never blocks.
class SimClock : public Clock {
 public:
  void wait_until(double t) override { now_ = std::max(now_, t); }
  double now() const override { return now_; }

 private:
  double now_ = 0.0;
};

/// Wall clock. time_scale experiment seconds elapse per real second; the
/// clock starts at 0 when constructed.
class RealClock : public Clock {
 public:
  explicit RealClock(double time_scale = 1.0) : scale_(time_scale), start_(std::chrono::steady_clock::now()) {
    if (!(time_scale > 0.0)) fail(Errc::BadParameter, "time_scale must be positive");
  }
  void wait_until(double t) override {
    const auto target = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(t / scale_));
    std::this_thread::sleep_until(target);
  }
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() * scale_;
  }

 private:
  double scale_;
  std::chrono::steady_clock::time_point start_;
};

// --- driver ------------------------------------------------------------------

struct SessionRecord {
  SessionSpec spec;
  double start_s = 0.0;
  double end_s = 0.0;
  SessionOutcome outcome = SessionOutcome::rest_over;
  std::vector<GameEvent> events;  // bomb-relative times
  std::optional<BombConfig> bomb;
  std::string note;

  double duration_s() const { return end_s - start_s; }
};

struct SessionLog {
  std::vector<SessionRecord> sessions;
  double trailing_idle_s = 0.0;
  double end_s = 0.0;
  bool aborted = false;
};

struct ExperimentOutlets {
  Outlet* markers = nullptr;
  Outlet* transcript = nullptr;
  const keywords::KeywordDictionary* dictionary = nullptr;
};

struct ExperimentHooks {
  /// After every tick, with the experiment time reached.
  std::function<void(double)> on_tick;
  std::function<void(const SessionSpec&, double, const BombState*)> on_session_start;
  std::function<void(const SessionRecord&)> on_session_end;
  /// Bomb state after any change (action, strike, explosion).
  std::function<void(const SessionSpec&, const BombState&)> on_state;
  std::function<void(const keywords::CaptionEvent&)> on_caption;
};

inline std::optional<Marker> marker_for(const GameEvent& e) {
  switch (e.kind) {
    case GameEventKind::action: return marker::Action{e.module_id, e.detail};
    case GameEventKind::module_solved: return marker::ModuleSolved{e.module_id};
    case GameEventKind::strike: return marker::Strike{e.module_id};
    case GameEventKind::defused: return marker::BombDefused{};
    case GameEventKind::exploded: return marker::BombExploded{};
    case GameEventKind::vent_prompt: return std::nullopt;
  }
  return std::nullopt;
}

inline SessionOutcome outcome_of(const BombState& bomb, const std::vector<GameEvent>& events) {
  if (bomb.terminal == game::Terminal::defused) return SessionOutcome::solved;
  for (const auto& e : events)
    if (e.kind == GameEventKind::exploded) return e.detail == game::kExplodedByTimer ? SessionOutcome::timeout
                                                                                     : SessionOutcome::exploded;
  return SessionOutcome::timeout;
}

namespace detail {

class Driver {
 public:
  Driver(const ExperimentPlan& plan, Player& player, const ExperimentOutlets& outlets, Clock& clock,
         const ExperimentHooks& hooks, std::vector<keywords::TranscriptEvent> replay)
      : plan_(plan), player_(player), out_(outlets), clock_(clock), hooks_(hooks), replay_(std::move(replay)) {
    std::stable_sort(replay_.begin(), replay_.end(),
                     [](const auto& a, const auto& b) { return a.timestamp_s < b.timestamp_s; });
    double t = 0.0;
    for (const auto& s : plan_.sessions) {
      t += s.duration_s;
      scheduled_end_.push_back(t);
    }
  }

  SessionLog run() {
    const long total_ticks = std::lround(plan_.scheduled_total_s() * kTicksPerSecond);
    start_session(0, 0.0);
    for (long k = 1; k <= total_ticks; ++k) {
      const double t = static_cast<double>(k) / kTicksPerSecond;
      clock_.wait_until(t);
      if (!player_.connected()) {
        abort_session(t);
        break;
      }
      if (current_ < plan_.sessions.size()) {
        auto inbound = player_.poll(bomb_ ? &*bomb_ : nullptr, session_.start_s, t);
        for (; replay_next_ < replay_.size() && replay_[replay_next_].timestamp_s <= t; ++replay_next_)
          inbound.push_back(TimedTranscript{replay_[replay_next_].timestamp_s, replay_[replay_next_].text});
        std::stable_sort(inbound.begin(), inbound.end(),
                         [](const Inbound& a, const Inbound& b) { return inbound_time(a) < inbound_time(b); });
        for (auto& in : inbound) {
          const double x = std::max(inbound_time(in), last_marker_);
          advance_to(x);
          if (auto* a = std::get_if<TimedAction>(&in)) {
            handle_action(*a, x);
          } else {
            handle_transcript(std::get<TimedTranscript>(in).text, x);
          }
        }
        advance_to(t);
      }
      if (hooks_.on_tick) hooks_.on_tick(t);
    }
    log_.end_s = log_.aborted ? clock_.now() : plan_.scheduled_total_s();
    if (!log_.aborted && !log_.sessions.empty())
      log_.trailing_idle_s = plan_.scheduled_total_s() - log_.sessions.back().end_s;
    return std::move(log_);
  }

 private:
  void emit(const Marker& m, double t) {
    last_marker_ = std::max(last_marker_, t);
    out_.markers->push_marker(m, last_marker_);
  }

  void start_session(std::size_t i, double t) {
    current_ = i;
    const SessionSpec& spec = plan_.sessions[i];
    session_ = SessionRecord{spec, t, t, SessionOutcome::rest_over, {}, std::nullopt, {}};
    bomb_.reset();
    if (spec.kind != SessionKind::rest) {
      session_.bomb = bomb_for(spec);
      bomb_.emplace(*session_.bomb);
    }
    emit(marker::SessionStart{spec.kind, spec.index}, t);
    player_.begin_session(spec, t);
    if (hooks_.on_session_start) hooks_.on_session_start(spec, t, bomb_ ? &*bomb_ : nullptr);
    if (bomb_ && hooks_.on_state) hooks_.on_state(spec, *bomb_);
  }

  void end_session(double t, SessionOutcome outcome) {
    session_.end_s = t;
    session_.outcome = outcome;
    emit(marker::SessionEnd{session_.spec.kind, session_.spec.index, outcome}, t);
    log_.sessions.push_back(session_);
    if (hooks_.on_session_end) hooks_.on_session_end(log_.sessions.back());
    bomb_.reset();
    const std::size_t next = current_ + 1;
    if (next < plan_.sessions.size()) {
      start_session(next, t);
    } else {
      current_ = next;
    }
  }

  void record(const std::vector<GameEvent>& events) {
    for (const auto& e : events) {
      session_.events.push_back(e);
      if (auto m = marker_for(e)) emit(*m, session_.start_s + e.at_s);
    }
    if (!events.empty() && hooks_.on_state) hooks_.on_state(session_.spec, *bomb_);
  }

  // Ends a finished bomb session at the time its bomb went terminal.
  void close_if_terminal() {
    if (!bomb_ || !bomb_->is_terminal()) return;
    double at = session_.start_s + bomb_->config.time_limit_s;
    for (const auto& e : session_.events)
      if (e.kind == GameEventKind::defused || e.kind == GameEventKind::exploded) at = session_.start_s + e.at_s;
    end_session(at, outcome_of(*bomb_, session_.events));
  }

  void advance_to(double x) {
    while (current_ < plan_.sessions.size()) {
      if (bomb_) {
        const double bt = std::min(x, session_.start_s + session_.spec.duration_s) - session_.start_s;
        auto tr = game::tick(std::move(*bomb_), bt);
        bomb_ = std::move(tr.state);
        record(tr.events);
        if (!bomb_->is_terminal()) return;
        close_if_terminal();
      } else {
        const double end = scheduled_end_[current_];
        if (x < end) return;
        end_session(end, SessionOutcome::rest_over);
      }
    }
  }

  void handle_action(const TimedAction& a, double x) {
    if (!bomb_) {
      player_.rejected(a, Error(Errc::InvalidAction, "no bomb is active"));
      return;
    }
    try {
      auto tr = game::apply_action(*bomb_, a.action, x - session_.start_s);
      bomb_ = std::move(tr.state);
      record(tr.events);
      close_if_terminal();
    } catch (const Error& e) {
      player_.rejected(a, e);
    }
  }

  void handle_transcript(const std::string& text, double x) {
    if (out_.transcript && !text.empty()) out_.transcript->push_marker(text, x);
    if (!out_.dictionary) return;
    auto caption = keywords::caption_for(*out_.dictionary, {x, text});
    if (!caption) return;
    for (const auto& w : caption->words) emit(marker::Caption{w}, x);
    if (hooks_.on_caption) hooks_.on_caption(*caption);
  }

  void abort_session(double t) {
    log_.aborted = true;
    advance_to(t);
    if (current_ >= plan_.sessions.size()) return;
    session_.note = "player transport lost";
    session_.end_s = std::max(t, last_marker_);
    session_.outcome = SessionOutcome::timeout;
    emit(marker::SessionEnd{session_.spec.kind, session_.spec.index, SessionOutcome::timeout}, session_.end_s);
    log_.sessions.push_back(session_);
    if (hooks_.on_session_end) hooks_.on_session_end(log_.sessions.back());
    bomb_.reset();
    current_ = plan_.sessions.size();
  }

  const ExperimentPlan& plan_;
  Player& player_;
  ExperimentOutlets out_;
  Clock& clock_;
  const ExperimentHooks& hooks_;
  std::vector<keywords::TranscriptEvent> replay_;
  std::size_t replay_next_ = 0;
  std::vector<double> scheduled_end_;
  std::size_t current_ = 0;
  SessionRecord session_;
  std::optional<BombState> bomb_;
  SessionLog log_;
  double last_marker_ = 0.0;
};

}  // namespace detail

/// Runs the plan tick by tick (10 ms). Task sessions end when their bomb is
/// defused or explodes; the following rest absorbs the leftover so every rest
/// ends on the planned schedule. Transcript entries in replay are filtered
/// into caption markers at their timestamps.
inline SessionLog run_experiment(const ExperimentPlan& plan, Player& player, const ExperimentOutlets& outlets,
                                 Clock& clock, const ExperimentHooks& hooks = {},
                                 std::vector<keywords::TranscriptEvent> replay = {}) {
  if (!outlets.markers) fail(Errc::BadParameter, "marker outlet required");
  validate_plan(plan, false);
  detail::Driver driver(plan, player, outlets, clock, hooks, std::move(replay));
  return driver.run();
}

inline SessionLog run_experiment(const ExperimentPlan& plan, Player& player, const ExperimentOutlets& outlets) {
  SimClock clock;
  return run_experiment(plan, player, outlets, clock);
}

}  // namespace stresslab::session
