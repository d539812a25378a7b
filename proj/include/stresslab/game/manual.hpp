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

#include <sstream>
#include <string>

#include "stresslab/game/modules.hpp"

namespace stresslab::game {

/// Renders the defusal manual (markdown) from the engine's rule tables.
inline std::string render_manual() {
  std::ostringstream md;
  md << "# Bomb Defusal Manual\n\n"
     << "The bomb explodes after " << kDefaultMaxStrikes
     << " strikes or when its timer reaches zero. Defuse it by solving every module except "
        "Venting Gas.\n\n";

  md << "## Wires\n\n"
     << "A wire module has 3 to 6 wires, numbered from 1 at the top. Cut exactly one wire. "
        "Use the first rule that applies:\n\n";
  int row = 1;
  for (const auto& rule : rules::wire_rules())
    md << row++ << ". If " << rule.condition << ", " << rule.instruction << ".\n";
  md << "\nCutting any other wire is a strike.\n\n";

  md << "## Keypad\n\n"
     << "Four symbols are shown. Press all four in the order they appear in this list:\n\n";
  for (int glyph : rules::kKeypadPrecedence)
    md << "- `" << glyph << "` " << rules::kGlyphNames[static_cast<std::size_t>(glyph)] << "\n";
  md << "\nA wrong press is a strike and the keypad starts over.\n\n";

  md << "## Simon Says\n\n"
     << "The module flashes a sequence that grows by one flash per round. Repeat the whole "
        "sequence each round, answering every flash with the color shown below for the bomb's "
        "current strike count.\n\n"
     << "| Flash |";
  for (int k = 0; k < static_cast<int>(rules::kSimonCycle.size()); ++k) md << " " << k << " strikes |";
  md << "\n|---|";
  for (std::size_t k = 0; k < rules::kSimonCycle.size(); ++k) md << "---|";
  md << "\n";
  for (SimonColor flash : rules::kSimonCycle) {
    md << "| " << to_string(flash) << " |";
    for (int k = 0; k < static_cast<int>(rules::kSimonCycle.size()); ++k)
      md << " " << to_string(rules::simon_response(flash, k)) << " |";
    md << "\n";
  }
  md << "\nA wrong color is a strike and the sequence restarts from round 1.\n\n";

  md << "## Button\n\n"
     << "- Label `" << to_string(ButtonLabel::press) << "`: press and immediately release.\n"
     << "- Label `" << to_string(ButtonLabel::hold)
     << "`: hold the button, then release it when the whole-second countdown on the timer is "
        "divisible by "
     << rules::kButtonReleaseDivisor << ".\n\n"
     << "Anything else is a strike.\n\n";

  md << "## Venting Gas (needy)\n\n"
     << "Every " << rules::kVentPromptPeriodS << " s the module asks \"VENT GAS Y/N\". Answer Y within "
     << rules::kVentAnswerDeadlineS
     << " s. Answering N, or not answering in time, is a strike. This module can never be "
        "solved and does not count towards defusal.\n";
  return md.str();
}

}  // namespace stresslab::game
