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

// Marker vocabulary. Markers are flat strings:
//
//   session_start:<kind>:<index>
//   session_end:<kind>:<index>:<outcome>
//   action:<module_id>:<detail>
//   module_solved:<module_id>
//   strike:<module_id>
//   bomb_defused
//   bomb_exploded
//   caption:<word>
//
// kind is rest|easy|hard, index is 1-based, outcome is
// solved|timeout|exploded|rest_over. <detail> may itself contain ':'.

#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace stresslab {

enum class SessionKind { rest, easy, hard };
enum class SessionOutcome { solved, timeout, exploded, rest_over };

inline constexpr std::string_view to_string(SessionKind kind) {
  switch (kind) {
    case SessionKind::rest: return "rest";
    case SessionKind::easy: return "easy";
    case SessionKind::hard: return "hard";
  }
  return "?";
}

inline constexpr std::string_view to_string(SessionOutcome outcome) {
  switch (outcome) {
    case SessionOutcome::solved: return "solved";
    case SessionOutcome::timeout: return "timeout";
    case SessionOutcome::exploded: return "exploded";
    case SessionOutcome::rest_over: return "rest_over";
  }
  return "?";
}

inline std::optional<SessionKind> parse_session_kind(std::string_view s) {
  if (s == "rest") return SessionKind::rest;
  if (s == "easy") return SessionKind::easy;
  if (s == "hard") return SessionKind::hard;
  return std::nullopt;
}

inline std::optional<SessionOutcome> parse_session_outcome(std::string_view s) {
  if (s == "solved") return SessionOutcome::solved;
  if (s == "timeout") return SessionOutcome::timeout;
  if (s == "exploded") return SessionOutcome::exploded;
  if (s == "rest_over") return SessionOutcome::rest_over;
  return std::nullopt;
}

namespace marker {

struct SessionStart {
  SessionKind kind;
  int index;
  bool operator==(const SessionStart&) const = default;
};
struct SessionEnd {
  SessionKind kind;
  int index;
  SessionOutcome outcome;
  bool operator==(const SessionEnd&) const = default;
};
struct Action {
  std::string module_id;
  std::string detail;
  bool operator==(const Action&) const = default;
};
struct ModuleSolved {
  std::string module_id;
  bool operator==(const ModuleSolved&) const = default;
};
struct Strike {
  std::string module_id;
  bool operator==(const Strike&) const = default;
};
struct BombDefused {
  bool operator==(const BombDefused&) const = default;
};
struct BombExploded {
  bool operator==(const BombExploded&) const = default;
};
struct Caption {
  std::string word;
  bool operator==(const Caption&) const = default;
};

}  // namespace marker

using Marker = std::variant<marker::SessionStart, marker::SessionEnd, marker::Action,
                            marker::ModuleSolved, marker::Strike, marker::BombDefused,
                            marker::BombExploded, marker::Caption>;

namespace detail {

// Identifier fields (module ids, caption words): non-empty, no ':' and no
// whitespace or control characters.
inline bool is_token(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == ':' || static_cast<unsigned char>(c) <= 0x20 || c == 0x7f;
  });
}

inline bool is_detail(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == '\n' || c == '\r' || c == '\t';
  });
}

inline std::optional<int> parse_index(std::string_view s) {
  if (s.empty() || s.front() == '0') return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value < 1) return std::nullopt;
  return value;
}

inline std::string_view next_field(std::string_view& rest) {
  const auto pos = rest.find(':');
  std::string_view head = rest.substr(0, pos);
  rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
  return head;
}

}  // namespace detail

inline std::string format_marker(const Marker& m) {
  struct Visitor {
    std::string operator()(const marker::SessionStart& v) const {
      return "session_start:" + std::string(to_string(v.kind)) + ":" + std::to_string(v.index);
    }
    std::string operator()(const marker::SessionEnd& v) const {
      return "session_end:" + std::string(to_string(v.kind)) + ":" + std::to_string(v.index) +
             ":" + std::string(to_string(v.outcome));
    }
    std::string operator()(const marker::Action& v) const {
      return "action:" + v.module_id + ":" + v.detail;
    }
    std::string operator()(const marker::ModuleSolved& v) const {
      return "module_solved:" + v.module_id;
    }
    std::string operator()(const marker::Strike& v) const { return "strike:" + v.module_id; }
    std::string operator()(const marker::BombDefused&) const { return "bomb_defused"; }
    std::string operator()(const marker::BombExploded&) const { return "bomb_exploded"; }
    std::string operator()(const marker::Caption& v) const { return "caption:" + v.word; }
  };
  return std::visit(Visitor{}, m);
}

/// Parses a label against the grammar. Returns nullopt for anything that is
/// not an exact match, so format_marker(*parse_marker(s)) == s whenever the
/// parse succeeds.
inline std::optional<Marker> parse_marker(std::string_view label) {
  if (label == "bomb_defused") return marker::BombDefused{};
  if (label == "bomb_exploded") return marker::BombExploded{};

  std::string_view rest = label;
  const std::string_view head = detail::next_field(rest);
  if (label.find(':') == std::string_view::npos) return std::nullopt;

  if (head == "session_start" || head == "session_end") {
    const auto kind = parse_session_kind(detail::next_field(rest));
    const bool is_end = head == "session_end";
    std::string_view index_field = is_end ? detail::next_field(rest) : rest;
    if (!is_end) rest = {};
    const auto index = detail::parse_index(index_field);
    if (!kind || !index) return std::nullopt;
    if (!is_end) return marker::SessionStart{*kind, *index};
    if (rest.find(':') != std::string_view::npos) return std::nullopt;
    const auto outcome = parse_session_outcome(rest);
    if (!outcome) return std::nullopt;
    return marker::SessionEnd{*kind, *index, *outcome};
  }
  if (head == "action") {
    const std::string_view module_id = detail::next_field(rest);
    if (!detail::is_token(module_id) || !detail::is_detail(rest)) return std::nullopt;
    return marker::Action{std::string(module_id), std::string(rest)};
  }
  if (head == "module_solved" || head == "strike" || head == "caption") {
    if (!detail::is_token(rest)) return std::nullopt;
    if (head == "module_solved") return marker::ModuleSolved{std::string(rest)};
    if (head == "strike") return marker::Strike{std::string(rest)};
    return marker::Caption{std::string(rest)};
  }
  return std::nullopt;
}

inline bool is_valid_marker(std::string_view label) { return parse_marker(label).has_value(); }

/// True for markers produced by bomb play (as opposed to session framing and
/// captions).
inline bool is_game_event_marker(const Marker& m) {
  return std::holds_alternative<marker::Action>(m) ||
         std::holds_alternative<marker::ModuleSolved>(m) ||
         std::holds_alternative<marker::Strike>(m) ||
         std::holds_alternative<marker::BombDefused>(m) ||
         std::holds_alternative<marker::BombExploded>(m);
}

}  // namespace stresslab
