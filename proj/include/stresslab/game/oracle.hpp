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

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stresslab/game/bomb.hpp"
#include "stresslab/game/modules.hpp"

namespace stresslab::game {

/// What the solver needs to know about the rest of the bomb.
struct BombContext {
  int strikes = 0;
  double time_limit_s = 0.0;
};

/// Full zero-strike solution of a module from its initial state. The HOLD
/// button's "release" must be sent inside a release window (see
/// next_release_time); VentGas has nothing to solve and yields no actions.
inline std::vector<PlayerAction> solution_oracle(const ModuleSpec& spec, const BombContext& ctx) {
  std::vector<PlayerAction> out;
  const std::string& id = spec.module_id;
  if (const auto* w = std::get_if<Wires>(&spec.variant)) {
    out.push_back({id, "cut:" + std::to_string(rules::wire_to_cut(w->colors))});
  } else if (const auto* k = std::get_if<Keypad>(&spec.variant)) {
    for (int g : rules::keypad_order(*k)) out.push_back({id, "press:" + std::to_string(g)});
  } else if (const auto* s = std::get_if<SimonSays>(&spec.variant)) {
    for (std::size_t round = 1; round <= s->flashes.size(); ++round)
      for (std::size_t i = 0; i < round; ++i)
        out.push_back({id, "press:" + std::string(to_string(
                                          rules::simon_response(s->flashes[i], ctx.strikes)))});
  } else if (const auto* b = std::get_if<Button>(&spec.variant)) {
    if (b->label == ButtonLabel::press) {
      out.push_back({id, "press"});
    } else {
      out.push_back({id, "hold"});
      out.push_back({id, "release"});
    }
  }
  return out;
}

/// Earliest time >= from_s on a grid of step_s at which a held HOLD button may
/// be released, or nullopt if no window remains before the time limit.
inline std::optional<double> next_release_time(double time_limit_s, double from_s, double step_s) {
  const long first = static_cast<long>(std::ceil(from_s / step_s - 1e-9));
  const long last = static_cast<long>(std::floor(time_limit_s / step_s + 1e-9));
  for (long i = first; i < last; ++i) {
    const double t = static_cast<double>(i) * step_s;
    if (rules::release_allowed(time_limit_s, t)) return t;
  }
  return std::nullopt;
}

/// Next correct action for a module given its current progress, or nullopt
/// when the right move is to wait (held HOLD button outside a release window,
/// VentGas with no open prompt, solved module).
inline std::optional<PlayerAction> next_oracle_action(const ModuleState& m, const BombState& bomb,
                                                      double now_s) {
  if (m.solved()) return std::nullopt;
  const std::string& id = m.spec.module_id;
  if (const auto* w = std::get_if<Wires>(&m.spec.variant))
    return PlayerAction{id, "cut:" + std::to_string(rules::wire_to_cut(w->colors))};
  if (const auto* k = std::get_if<Keypad>(&m.spec.variant))
    return PlayerAction{
        id, "press:" + std::to_string(rules::keypad_order(*k)[static_cast<std::size_t>(m.progress.presses)])};
  if (const auto* s = std::get_if<SimonSays>(&m.spec.variant)) {
    const auto flash = s->flashes[static_cast<std::size_t>(m.progress.position)];
    return PlayerAction{id, "press:" + std::string(to_string(rules::simon_response(flash, bomb.strikes)))};
  }
  if (const auto* b = std::get_if<Button>(&m.spec.variant)) {
    if (!m.progress.held) return PlayerAction{id, b->label == ButtonLabel::press ? "press" : "hold"};
    if (b->label == ButtonLabel::press || rules::release_allowed(bomb.config.time_limit_s, now_s))
      return PlayerAction{id, "release"};
    return std::nullopt;
  }
  if (m.progress.open_prompt) return PlayerAction{id, "answer:Y"};
  return std::nullopt;
}

}  // namespace stresslab::game
