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

// Puzzle module definitions, the rule tables that decide what counts as a
// correct action, and seeded bomb generation. The defusal manual is rendered
// from the same tables (see manual.hpp).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stresslab/rng.hpp"

namespace stresslab::game {

enum class WireColor { red, blue, white, yellow, black };
enum class SimonColor { red, blue, green, yellow };
enum class ButtonColor { red, blue, white, yellow };
enum class ButtonLabel { press, hold };

inline constexpr std::array<WireColor, 5> kWireColors = {WireColor::red, WireColor::blue,
                                                         WireColor::white, WireColor::yellow,
                                                         WireColor::black};
inline constexpr std::array<ButtonColor, 4> kButtonColors = {ButtonColor::red, ButtonColor::blue,
                                                             ButtonColor::white, ButtonColor::yellow};

inline constexpr std::string_view to_string(WireColor c) {
  constexpr std::array<std::string_view, 5> names = {"red", "blue", "white", "yellow", "black"};
  return names[static_cast<std::size_t>(c)];
}
inline constexpr std::string_view to_string(SimonColor c) {
  constexpr std::array<std::string_view, 4> names = {"red", "blue", "green", "yellow"};
  return names[static_cast<std::size_t>(c)];
}
inline constexpr std::string_view to_string(ButtonColor c) {
  constexpr std::array<std::string_view, 4> names = {"red", "blue", "white", "yellow"};
  return names[static_cast<std::size_t>(c)];
}
inline constexpr std::string_view to_string(ButtonLabel l) {
  return l == ButtonLabel::press ? "PRESS" : "HOLD";
}

template <typename Enum, std::size_t N>
std::optional<Enum> enum_from_string(std::string_view s, const std::array<Enum, N>& values) {
  for (Enum v : values)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

// --- module specs ----------------------------------------------------------

struct Wires {
  std::vector<WireColor> colors;  // 3..6, top to bottom
  bool operator==(const Wires&) const = default;
};

struct Keypad {
  std::array<int, 4> symbols{};  // distinct glyph ids in [0, 8), display order
  bool operator==(const Keypad&) const = default;
};

struct SimonSays {
  std::vector<SimonColor> flashes;  // 3..5
  bool operator==(const SimonSays&) const = default;
};

struct Button {
  ButtonColor color = ButtonColor::red;
  ButtonLabel label = ButtonLabel::press;
  bool operator==(const Button&) const = default;
};

/// Needy module: asks "VENT GAS Y/N" periodically and can never be solved.
struct VentGas {
  double prompt_period_s = 30.0;
  double answer_deadline_s = 5.0;
  bool operator==(const VentGas&) const = default;
};

using ModuleVariant = std::variant<Wires, Keypad, SimonSays, Button, VentGas>;

inline constexpr std::array<std::string_view, 5> kVariantNames = {"wires", "keypad", "simon_says",
                                                                  "button", "vent_gas"};

inline std::string_view variant_name(const ModuleVariant& v) { return kVariantNames[v.index()]; }

struct ModuleSpec {
  std::string module_id;
  ModuleVariant variant;

  bool needy() const { return std::holds_alternative<VentGas>(variant); }
  bool operator==(const ModuleSpec&) const = default;
};

struct PlayerAction {
  std::string module_id;
  std::string detail;
  bool operator==(const PlayerAction&) const = default;
};

// --- rule tables -----------------------------------------------------------

inline constexpr int kDefaultMaxStrikes = 3;

namespace rules {

/// Wires: first matching row decides which wire (1-based) to cut.
struct WireRule {
  std::string_view condition;
  std::string_view instruction;
  bool (*applies)(std::span<const WireColor>);
  int (*wire)(std::span<const WireColor>);
};

inline int count_color(std::span<const WireColor> w, WireColor c) {
  return static_cast<int>(std::count(w.begin(), w.end(), c));
}

inline const std::array<WireRule, 4>& wire_rules() {
  static const std::array<WireRule, 4> table = {{
      {"there is no red wire", "cut the second wire",
       [](std::span<const WireColor> w) { return count_color(w, WireColor::red) == 0; },
       [](std::span<const WireColor>) { return 2; }},
      {"the last wire is white", "cut the last wire",
       [](std::span<const WireColor> w) { return w.back() == WireColor::white; },
       [](std::span<const WireColor> w) { return static_cast<int>(w.size()); }},
      {"there is more than one blue wire", "cut the last blue wire",
       [](std::span<const WireColor> w) { return count_color(w, WireColor::blue) > 1; },
       [](std::span<const WireColor> w) {
         const auto it = std::find(w.rbegin(), w.rend(), WireColor::blue);
         return static_cast<int>(w.rend() - it);
       }},
      {"otherwise", "cut the first wire", [](std::span<const WireColor>) { return true; },
       [](std::span<const WireColor>) { return 1; }},
  }};
  return table;
}

inline int wire_to_cut(std::span<const WireColor> wires) {
  for (const auto& rule : wire_rules())
    if (rule.applies(wires)) return rule.wire(wires);
  return 1;
}

/// Keypad glyphs. Precedence is the order of this list (ascending id).
inline constexpr std::array<std::string_view, 8> kGlyphNames = {
    "omega", "psi", "star", "trident", "hook", "lambda", "copyright", "pitchfork"};
inline constexpr std::array<int, 8> kKeypadPrecedence = {0, 1, 2, 3, 4, 5, 6, 7};

inline int keypad_rank(int glyph) {
  const auto it = std::find(kKeypadPrecedence.begin(), kKeypadPrecedence.end(), glyph);
  return static_cast<int>(it - kKeypadPrecedence.begin());
}

inline std::array<int, 4> keypad_order(const Keypad& k) {
  auto order = k.symbols;
  std::sort(order.begin(), order.end(),
            [](int a, int b) { return keypad_rank(a) < keypad_rank(b); });
  return order;
}

/// Simon Says: with k strikes, answer each flash with the color k steps
/// further along this cycle.
inline constexpr std::array<SimonColor, 4> kSimonCycle = {SimonColor::red, SimonColor::blue,
                                                          SimonColor::green, SimonColor::yellow};

inline SimonColor simon_response(SimonColor flash, int strikes) {
  const auto pos = static_cast<std::size_t>(
      std::find(kSimonCycle.begin(), kSimonCycle.end(), flash) - kSimonCycle.begin());
  return kSimonCycle[(pos + static_cast<std::size_t>(std::max(strikes, 0))) % kSimonCycle.size()];
}

/// Button: PRESS is tapped; HOLD is held and released when the whole-second
/// countdown is a multiple of this divisor.
inline constexpr int kButtonReleaseDivisor = 5;

inline long countdown_seconds(double time_limit_s, double at_s) {
  return static_cast<long>(std::floor(time_limit_s - at_s + 1e-9));
}

inline bool release_allowed(double time_limit_s, double at_s) {
  const long c = countdown_seconds(time_limit_s, at_s);
  return c >= 0 && c % kButtonReleaseDivisor == 0;
}

inline constexpr double kVentPromptPeriodS = 30.0;
inline constexpr double kVentAnswerDeadlineS = 5.0;

}  // namespace rules

// --- difficulty and generation --------------------------------------------

enum class Difficulty { easy5min, medium, hard90s, easy_session, hard_session };

inline constexpr std::array<Difficulty, 5> kDifficulties = {
    Difficulty::easy5min, Difficulty::medium, Difficulty::hard90s, Difficulty::easy_session,
    Difficulty::hard_session};

struct DifficultyLevel {
  Difficulty name;
  double time_limit_s;
  int module_count;
};

inline constexpr DifficultyLevel level_of(Difficulty d) {
  switch (d) {
    case Difficulty::easy5min: return {d, 300.0, 4};
    case Difficulty::medium: return {d, 120.0, 6};
    case Difficulty::hard90s: return {d, 90.0, 9};
    case Difficulty::easy_session: return {d, 120.0, 1};
    case Difficulty::hard_session: return {d, 20.0, 1};
  }
  return {d, 0.0, 0};
}

inline constexpr std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy5min: return "easy5min";
    case Difficulty::medium: return "medium";
    case Difficulty::hard90s: return "hard90s";
    case Difficulty::easy_session: return "easy_session";
    case Difficulty::hard_session: return "hard_session";
  }
  return "?";
}

struct BombConfig {
  std::uint64_t seed = 0;
  double time_limit_s = 0.0;
  int max_strikes = kDefaultMaxStrikes;
  std::vector<ModuleSpec> modules;

  bool operator==(const BombConfig&) const = default;
};

inline ModuleVariant draw_variant(Rng& rng, std::size_t which) {
  switch (which) {
    case 0: {
      Wires w;
      const int n = rng.between(3, 6);
      for (int i = 0; i < n; ++i) w.colors.push_back(kWireColors[rng.below(kWireColors.size())]);
      return w;
    }
    case 1: {
      std::array<int, 8> glyphs{};
      for (int i = 0; i < 8; ++i) glyphs[static_cast<std::size_t>(i)] = i;
      rng.shuffle(std::span<int>(glyphs));
      Keypad k;
      std::copy_n(glyphs.begin(), 4, k.symbols.begin());
      return k;
    }
    case 2: {
      SimonSays s;
      const int n = rng.between(3, 5);
      for (int i = 0; i < n; ++i) s.flashes.push_back(rules::kSimonCycle[rng.below(4)]);
      return s;
    }
    case 3: {
      Button b;
      b.color = kButtonColors[rng.below(kButtonColors.size())];
      b.label = rng.below(2) == 0 ? ButtonLabel::press : ButtonLabel::hold;
      return b;
    }
    default:
      return VentGas{rules::kVentPromptPeriodS, rules::kVentAnswerDeadlineS};
  }
}

/// Deterministic in (seed, difficulty). Each slot draws one of the five
/// variants uniformly; a bomb always keeps at least one solvable module, so if
/// every slot came up VentGas the last slot is redrawn among the other four.
inline BombConfig generate_bomb(std::uint64_t seed, Difficulty difficulty) {
  const DifficultyLevel lvl = level_of(difficulty);
  Rng rng(derive_seed(seed, 0xB0B0 + static_cast<std::uint64_t>(difficulty)));
  BombConfig cfg;
  cfg.seed = seed;
  cfg.time_limit_s = lvl.time_limit_s;
  cfg.max_strikes = kDefaultMaxStrikes;
  std::vector<std::size_t> kinds;
  for (int i = 0; i < lvl.module_count; ++i) kinds.push_back(rng.below(kVariantNames.size()));
  if (std::all_of(kinds.begin(), kinds.end(), [](std::size_t k) { return k == 4; }))
    kinds.back() = rng.below(4);
  for (std::size_t i = 0; i < kinds.size(); ++i)
    cfg.modules.push_back(ModuleSpec{"m" + std::to_string(i + 1), draw_variant(rng, kinds[i])});
  return cfg;
}

/// Checks the structural invariants of a module spec.
inline bool spec_valid(const ModuleSpec& spec) {
  if (spec.module_id.empty()) return false;
  struct Visitor {
    bool operator()(const Wires& w) const { return w.colors.size() >= 3 && w.colors.size() <= 6; }
    bool operator()(const Keypad& k) const {
      auto s = k.symbols;
      std::sort(s.begin(), s.end());
      return std::adjacent_find(s.begin(), s.end()) == s.end() && s.front() >= 0 && s.back() < 8;
    }
    bool operator()(const SimonSays& s) const {
      return s.flashes.size() >= 3 && s.flashes.size() <= 5;
    }
    bool operator()(const Button&) const { return true; }
    bool operator()(const VentGas& v) const {
      return v.prompt_period_s > 0.0 && v.answer_deadline_s > 0.0;
    }
  };
  return std::visit(Visitor{}, spec.variant);
}

}  // namespace stresslab::game
