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

// JSON forms of bomb configs, event logs and the per-module client view.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "stresslab/error.hpp"
#include "stresslab/game/bomb.hpp"

namespace stresslab::game {

using ojson = nlohmann::ordered_json;

inline ojson module_to_json(const ModuleSpec& spec) {
  ojson j{{"module_id", spec.module_id}, {"variant", variant_name(spec.variant)}};
  if (const auto* w = std::get_if<Wires>(&spec.variant)) {
    ojson colors = ojson::array();
    for (auto c : w->colors) colors.push_back(to_string(c));
    j["colors"] = colors;
  } else if (const auto* k = std::get_if<Keypad>(&spec.variant)) {
    j["symbols"] = k->symbols;
  } else if (const auto* s = std::get_if<SimonSays>(&spec.variant)) {
    ojson flashes = ojson::array();
    for (auto c : s->flashes) flashes.push_back(to_string(c));
    j["flash_sequence"] = flashes;
  } else if (const auto* b = std::get_if<Button>(&spec.variant)) {
    j["color"] = to_string(b->color);
    j["label"] = to_string(b->label);
  } else if (const auto* v = std::get_if<VentGas>(&spec.variant)) {
    j["prompt_period_s"] = v->prompt_period_s;
    j["answer_deadline_s"] = v->answer_deadline_s;
  }
  return j;
}

inline ModuleSpec module_from_json(const ojson& j) {
  try {
    ModuleSpec spec;
    spec.module_id = j.at("module_id").get<std::string>();
    const auto variant = j.at("variant").get<std::string>();
    auto bad = [&](const std::string& what) {
      fail(Errc::ParseError, "module '" + spec.module_id + "': " + what);
    };
    if (variant == "wires") {
      Wires w;
      for (const auto& c : j.at("colors")) {
        auto color = enum_from_string(c.get<std::string>(), kWireColors);
        if (!color) bad("unknown wire color");
        w.colors.push_back(*color);
      }
      spec.variant = w;
    } else if (variant == "keypad") {
      spec.variant = Keypad{j.at("symbols").get<std::array<int, 4>>()};
    } else if (variant == "simon_says") {
      SimonSays s;
      for (const auto& c : j.at("flash_sequence")) {
        auto color = enum_from_string(c.get<std::string>(), rules::kSimonCycle);
        if (!color) bad("unknown simon color");
        s.flashes.push_back(*color);
      }
      spec.variant = s;
    } else if (variant == "button") {
      auto color = enum_from_string(j.at("color").get<std::string>(), kButtonColors);
      auto label = j.at("label").get<std::string>();
      if (!color || (label != "PRESS" && label != "HOLD")) bad("bad button");
      spec.variant = Button{*color, label == "PRESS" ? ButtonLabel::press : ButtonLabel::hold};
    } else if (variant == "vent_gas") {
      spec.variant = VentGas{j.at("prompt_period_s").get<double>(), j.at("answer_deadline_s").get<double>()};
    } else {
      bad("unknown variant '" + variant + "'");
    }
    if (!spec_valid(spec)) bad("violates module invariants");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("module: ") + e.what());
  }
}

inline ojson event_to_json(const GameEvent& e) {
  return ojson{{"at_s", e.at_s},
               {"kind", to_string(e.kind)},
               {"module_id", e.module_id},
               {"detail", e.detail}};
}

inline GameEvent event_from_json(const ojson& j) {
  static constexpr std::array<GameEventKind, 6> kinds = {
      GameEventKind::action, GameEventKind::module_solved, GameEventKind::strike,
      GameEventKind::defused, GameEventKind::exploded, GameEventKind::vent_prompt};
  try {
    auto kind = enum_from_string(j.at("kind").get<std::string>(), kinds);
    if (!kind) fail(Errc::ParseError, "unknown event kind");
    return GameEvent{j.at("at_s").get<double>(), *kind, j.at("module_id").get<std::string>(),
                     j.at("detail").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("event: ") + e.what());
  }
}

/// One line of the bomb log format: the config plus its event log.
inline ojson bomb_log_to_json(const BombConfig& cfg, const std::vector<GameEvent>& events) {
  ojson modules = ojson::array();
  for (const auto& m : cfg.modules) modules.push_back(module_to_json(m));
  ojson evs = ojson::array();
  for (const auto& e : events) evs.push_back(event_to_json(e));
  return ojson{{"seed", cfg.seed},
               {"time_limit_s", cfg.time_limit_s},
               {"max_strikes", cfg.max_strikes},
               {"modules", modules},
               {"events", evs}};
}

struct BombLog {
  BombConfig config;
  std::vector<GameEvent> events;
};

inline BombLog bomb_log_from_json(const ojson& j) {
  try {
    BombLog log;
    log.config.seed = j.at("seed").get<std::uint64_t>();
    log.config.time_limit_s = j.at("time_limit_s").get<double>();
    log.config.max_strikes = j.at("max_strikes").get<int>();
    for (const auto& m : j.at("modules")) log.config.modules.push_back(module_from_json(m));
    if (j.contains("events"))
      for (const auto& e : j.at("events")) log.events.push_back(event_from_json(e));
    return log;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bomb log: ") + e.what());
  }
}

/// What a defuser client is shown for a module: its spec fields plus live
/// progress. No rule evaluation happens client-side.
inline ojson module_view(const ModuleState& m) {
  ojson view = module_to_json(m.spec);
  view.erase("module_id");
  view.erase("variant");
  if (std::holds_alternative<Wires>(m.spec.variant)) {
    view["cut"] = m.progress.cut;
  } else if (std::holds_alternative<Keypad>(m.spec.variant)) {
    view["presses"] = m.progress.presses;
  } else if (const auto* s = std::get_if<SimonSays>(&m.spec.variant)) {
    // Only the flashes of the current round are visible.
    ojson shown = ojson::array();
    for (int i = 0; i < m.progress.round && i < static_cast<int>(s->flashes.size()); ++i)
      shown.push_back(to_string(s->flashes[static_cast<std::size_t>(i)]));
    view.erase("flash_sequence");
    view["flashes"] = shown;
    view["round"] = m.progress.round;
    view["position"] = m.progress.position;
  } else if (std::holds_alternative<Button>(m.spec.variant)) {
    view["held"] = m.progress.held;
  } else {
    view["prompt_open"] = m.progress.open_prompt.has_value();
  }
  return view;
}

}  // namespace stresslab::game
