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

// Bomb state machine. Transitions are pure: they take a state by value and
// return the next state with the events it produced. The bomb clock is
// supplied by the caller and never read from a wall clock.

#pragma once

#include <algorithm>
#include <charconv>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stresslab/error.hpp"
#include "stresslab/game/modules.hpp"

namespace stresslab::game {

enum class GameEventKind { action, module_solved, strike, defused, exploded, vent_prompt };

inline constexpr std::string_view to_string(GameEventKind k) {
  switch (k) {
    case GameEventKind::action: return "action";
    case GameEventKind::module_solved: return "module_solved";
    case GameEventKind::strike: return "strike";
    case GameEventKind::defused: return "defused";
    case GameEventKind::exploded: return "exploded";
    case GameEventKind::vent_prompt: return "vent_prompt";
  }
  return "?";
}

struct GameEvent {
  double at_s = 0.0;
  GameEventKind kind = GameEventKind::action;
  std::string module_id;
  std::string detail;

  bool operator==(const GameEvent&) const = default;
};

/// detail of an exploded event.
inline constexpr std::string_view kExplodedByTimer = "timer";
inline constexpr std::string_view kExplodedByStrikes = "strikes";
inline constexpr std::string_view kAlreadySolved = "already_solved";

enum class ModuleStatus { unsolved, solved };

/// Variant-specific progress; only the fields of the module's variant are used.
struct ModuleProgress {
  std::vector<bool> cut;               // wires
  int presses = 0;                     // keypad
  int round = 1;                       // simon says, 1-based
  int position = 0;                    // simon says, index within round
  bool held = false;                   // button
  int prompts_issued = 0;              // vent gas
  std::optional<double> open_prompt;   // vent gas: time the open prompt appeared

  bool operator==(const ModuleProgress&) const = default;
};

struct ModuleState {
  ModuleSpec spec;
  ModuleStatus status = ModuleStatus::unsolved;
  ModuleProgress progress;

  bool solved() const { return status == ModuleStatus::solved; }
  bool operator==(const ModuleState&) const = default;
};

enum class Terminal { none, defused, exploded };

struct BombState {
  BombConfig config;
  std::vector<ModuleState> modules;
  int strikes = 0;
  double clock_s = 0.0;
  Terminal terminal = Terminal::none;

  BombState() = default;
  explicit BombState(BombConfig cfg) : config(std::move(cfg)) {
    for (const auto& spec : config.modules) {
      ModuleState m{spec, ModuleStatus::unsolved, {}};
      if (const auto* w = std::get_if<Wires>(&spec.variant)) m.progress.cut.assign(w->colors.size(), false);
      modules.push_back(std::move(m));
    }
  }

  bool is_terminal() const { return terminal != Terminal::none; }
  double remaining_s() const { return std::max(0.0, config.time_limit_s - clock_s); }

  int solved_count() const {
    return static_cast<int>(std::count_if(modules.begin(), modules.end(),
                                          [](const ModuleState& m) { return m.solved(); }));
  }
  int required_count() const {
    return static_cast<int>(std::count_if(modules.begin(), modules.end(),
                                          [](const ModuleState& m) { return !m.spec.needy(); }));
  }

  const ModuleState* find(std::string_view id) const {
    for (const auto& m : modules)
      if (m.spec.module_id == id) return &m;
    return nullptr;
  }
  ModuleState* find(std::string_view id) {
    return const_cast<ModuleState*>(std::as_const(*this).find(id));
  }

  bool operator==(const BombState&) const = default;
};

struct Transition {
  BombState state;
  std::vector<GameEvent> events;
};

namespace detail {

inline void add_strike(BombState& s, const std::string& module_id, double at,
                       std::vector<GameEvent>& events) {
  ++s.strikes;
  events.push_back({at, GameEventKind::strike, module_id, {}});
  // The Simon Says mapping depends on the strike count, so any strike restarts it.
  for (auto& m : s.modules)
    if (std::holds_alternative<SimonSays>(m.spec.variant)) {
      m.progress.round = 1;
      m.progress.position = 0;
    }
  if (s.strikes >= s.config.max_strikes) {
    s.terminal = Terminal::exploded;
    events.push_back({at, GameEventKind::exploded, {}, std::string(kExplodedByStrikes)});
  }
}

inline void solve(BombState& s, ModuleState& m, double at, std::vector<GameEvent>& events) {
  m.status = ModuleStatus::solved;
  events.push_back({at, GameEventKind::module_solved, m.spec.module_id, {}});
  if (s.solved_count() == s.required_count()) {
    s.terminal = Terminal::defused;
    events.push_back({at, GameEventKind::defused, {}, {}});
  }
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<int> int_arg(std::optional<std::string_view> s) {
  return s ? parse_int(*s) : std::nullopt;
}

[[noreturn]] inline void invalid(const PlayerAction& a, std::string_view why) {
  fail(Errc::InvalidAction,
       "action '" + a.detail + "' on module '" + a.module_id + "': " + std::string(why));
}

}  // namespace detail

/// Advances the bomb clock to now_s: issues due vent prompts, strikes for
/// prompts left unanswered past their deadline, and explodes the bomb once
/// the time limit is reached. A now_s earlier than the current clock is a
/// no-op.
inline Transition tick(BombState state, double now_s) {
  std::vector<GameEvent> events;
  if (state.is_terminal() || now_s < state.clock_s) return {std::move(state), std::move(events)};
  const double limit = state.config.time_limit_s;

  while (!state.is_terminal()) {
    // Earliest pending vent occurrence across all needy modules.
    ModuleState* next = nullptr;
    double next_t = std::numeric_limits<double>::infinity();
    bool is_deadline = false;
    for (auto& m : state.modules) {
      const auto* vent = std::get_if<VentGas>(&m.spec.variant);
      if (!vent) continue;
      double t;
      bool deadline;
      if (m.progress.open_prompt) {
        t = *m.progress.open_prompt + vent->answer_deadline_s;
        deadline = true;
      } else {
        t = (m.progress.prompts_issued + 1) * vent->prompt_period_s;
        deadline = false;
      }
      if (t < next_t) {
        next_t = t;
        next = &m;
        is_deadline = deadline;
      }
    }
    if (!next || next_t > now_s || next_t >= limit) break;
    if (is_deadline) {
      next->progress.open_prompt.reset();
      detail::add_strike(state, next->spec.module_id, next_t, events);
    } else {
      ++next->progress.prompts_issued;
      next->progress.open_prompt = next_t;
      events.push_back({next_t, GameEventKind::vent_prompt, next->spec.module_id, "VENT GAS Y/N"});
    }
  }

  if (!state.is_terminal() && now_s >= limit) {
    state.terminal = Terminal::exploded;
    events.push_back({limit, GameEventKind::exploded, {}, std::string(kExplodedByTimer)});
  }
  state.clock_s = now_s;
  return {std::move(state), std::move(events)};
}

/// Applies one player action at bomb time at_s. The clock is first advanced
/// to at_s; if that alone ends the game, the action is dropped and only the
/// tick events are returned.
inline Transition apply_action(BombState state, const PlayerAction& action, double at_s) {
  if (state.is_terminal()) fail(Errc::GameOver, "bomb is already " +
                                    std::string(state.terminal == Terminal::defused ? "defused"
                                                                                    : "exploded"));
  if (at_s < state.clock_s)
    fail(Errc::NonMonotonicTimestamp, "action at " + std::to_string(at_s) + " before clock " +
                                          std::to_string(state.clock_s));
  if (!state.find(action.module_id))
    fail(Errc::UnknownModule, "no module '" + action.module_id + "'");

  auto [next, events] = tick(std::move(state), at_s);
  if (next.is_terminal()) return {std::move(next), std::move(events)};

  ModuleState& m = *next.find(action.module_id);
  const std::string_view d = action.detail;
  if (m.solved()) {
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, std::string(kAlreadySolved)});
    return {std::move(next), std::move(events)};
  }

  // Validate before emitting anything so a rejected action leaves no trace.
  auto arg = [&](std::string_view prefix) -> std::optional<std::string_view> {
    if (d.substr(0, prefix.size()) != prefix) return std::nullopt;
    return d.substr(prefix.size());
  };

  if (const auto* w = std::get_if<Wires>(&m.spec.variant)) {
    const auto n = detail::int_arg(arg("cut:"));
    if (!n || *n < 1 || *n > static_cast<int>(w->colors.size()))
      detail::invalid(action, "expected cut:<1.." + std::to_string(w->colors.size()) + ">");
    if (m.progress.cut[static_cast<std::size_t>(*n - 1)]) detail::invalid(action, "wire already cut");
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, action.detail});
    m.progress.cut[static_cast<std::size_t>(*n - 1)] = true;
    if (*n == rules::wire_to_cut(w->colors)) {
      detail::solve(next, m, at_s, events);
    } else {
      detail::add_strike(next, m.spec.module_id, at_s, events);
    }
  } else if (const auto* k = std::get_if<Keypad>(&m.spec.variant)) {
    const auto g = detail::int_arg(arg("press:"));
    if (!g || std::find(k->symbols.begin(), k->symbols.end(), *g) == k->symbols.end())
      detail::invalid(action, "glyph not on this keypad");
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, action.detail});
    const auto order = rules::keypad_order(*k);
    if (*g == order[static_cast<std::size_t>(m.progress.presses)]) {
      if (++m.progress.presses == 4) detail::solve(next, m, at_s, events);
    } else {
      m.progress.presses = 0;
      detail::add_strike(next, m.spec.module_id, at_s, events);
    }
  } else if (const auto* s = std::get_if<SimonSays>(&m.spec.variant)) {
    const auto name = arg("press:");
    const auto color = name ? enum_from_string(*name, rules::kSimonCycle) : std::nullopt;
    if (!color) detail::invalid(action, "expected press:<red|blue|green|yellow>");
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, action.detail});
    const auto flash = s->flashes[static_cast<std::size_t>(m.progress.position)];
    if (*color == rules::simon_response(flash, next.strikes)) {
      if (++m.progress.position == m.progress.round) {
        if (m.progress.round == static_cast<int>(s->flashes.size())) {
          detail::solve(next, m, at_s, events);
        } else {
          ++m.progress.round;
          m.progress.position = 0;
        }
      }
    } else {
      detail::add_strike(next, m.spec.module_id, at_s, events);
    }
  } else if (const auto* b = std::get_if<Button>(&m.spec.variant)) {
    if (d != "press" && d != "hold" && d != "release")
      detail::invalid(action, "expected press, hold or release");
    if (d == "release" && !m.progress.held) detail::invalid(action, "button is not held");
    if (d != "release" && m.progress.held) detail::invalid(action, "button is already held");
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, action.detail});
    if (d == "hold") {
      m.progress.held = true;
    } else if (d == "press") {
      if (b->label == ButtonLabel::press) {
        detail::solve(next, m, at_s, events);
      } else {
        detail::add_strike(next, m.spec.module_id, at_s, events);
      }
    } else {
      m.progress.held = false;
      if (b->label == ButtonLabel::hold && rules::release_allowed(next.config.time_limit_s, at_s)) {
        detail::solve(next, m, at_s, events);
      } else {
        detail::add_strike(next, m.spec.module_id, at_s, events);
      }
    }
  } else {
    if (d != "answer:Y" && d != "answer:N") detail::invalid(action, "expected answer:Y or answer:N");
    events.push_back({at_s, GameEventKind::action, m.spec.module_id, action.detail});
    if (m.progress.open_prompt) {
      m.progress.open_prompt.reset();
      if (d == "answer:N") detail::add_strike(next, m.spec.module_id, at_s, events);
    }
  }
  return {std::move(next), std::move(events)};
}

/// Every action the module widgets currently offer. Used by the random
/// player and by the gateway to describe what a client may send.
inline std::vector<PlayerAction> available_actions(const BombState& s) {
  std::vector<PlayerAction> out;
  if (s.is_terminal()) return out;
  for (const auto& m : s.modules) {
    if (m.solved()) continue;
    const std::string& id = m.spec.module_id;
    if (const auto* w = std::get_if<Wires>(&m.spec.variant)) {
      for (std::size_t i = 0; i < w->colors.size(); ++i)
        if (!m.progress.cut[i]) out.push_back({id, "cut:" + std::to_string(i + 1)});
    } else if (const auto* k = std::get_if<Keypad>(&m.spec.variant)) {
      for (int g : k->symbols) out.push_back({id, "press:" + std::to_string(g)});
    } else if (std::holds_alternative<SimonSays>(m.spec.variant)) {
      for (SimonColor c : rules::kSimonCycle) out.push_back({id, "press:" + std::string(to_string(c))});
    } else if (std::holds_alternative<Button>(m.spec.variant)) {
      if (m.progress.held) {
        out.push_back({id, "release"});
      } else {
        out.push_back({id, "press"});
        out.push_back({id, "hold"});
      }
    } else if (m.progress.open_prompt) {
      out.push_back({id, "answer:Y"});
      out.push_back({id, "answer:N"});
    }
  }
  return out;
}

}  // namespace stresslab::game
