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

// Gateway wire format. Every frame is one JSON object
//   {"type": <string>, "seq": <int>, "payload": {...}}
// with seq counting 1, 2, 3, ... independently in each direction.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "stresslab/error.hpp"
#include "stresslab/game/bomb.hpp"
#include "stresslab/game/serialize.hpp"
#include "stresslab/keywords.hpp"
#include "stresslab/session.hpp"

namespace stresslab::gateway {

using ojson = nlohmann::ordered_json;

enum class MsgType { hello, state, timer, caption, action, transcript, session, error, bye };

inline constexpr std::array<MsgType, 9> kMsgTypes = {MsgType::hello,  MsgType::state,      MsgType::timer,
                                                     MsgType::caption, MsgType::action,    MsgType::transcript,
                                                     MsgType::session, MsgType::error,     MsgType::bye};

inline constexpr std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::hello: return "hello";
    case MsgType::state: return "state";
    case MsgType::timer: return "timer";
    case MsgType::caption: return "caption";
    case MsgType::action: return "action";
    case MsgType::transcript: return "transcript";
    case MsgType::session: return "session";
    case MsgType::error: return "error";
    case MsgType::bye: return "bye";
  }
  return "?";
}

inline std::optional<MsgType> parse_msg_type(std::string_view s) {
  for (MsgType t : kMsgTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

enum class Role { defuser, expert };

inline constexpr std::string_view to_string(Role r) { return r == Role::defuser ? "defuser" : "expert"; }

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "defuser") return Role::defuser;
  if (s == "expert") return Role::expert;
  return std::nullopt;
}

struct Message {
  MsgType type = MsgType::hello;
  long long seq = 0;
  ojson payload = ojson::object();
};

inline std::string encode(const Message& m) {
  return ojson{{"type", to_string(m.type)}, {"seq", m.seq}, {"payload", m.payload}}.dump();
}

namespace detail {

[[noreturn]] inline void violation(const std::string& what) { fail(Errc::ProtocolError, what); }

inline const ojson& field(const ojson& payload, const char* name, ojson::value_t kind, const char* kind_name) {
  auto it = payload.find(name);
  if (it == payload.end()) violation(std::string("payload missing '") + name + "'");
  const bool ok = kind == ojson::value_t::number_float     ? it->is_number()
                  : kind == ojson::value_t::number_integer ? it->is_number_integer()
                                                           : it->type() == kind;
  if (!ok) violation(std::string("payload field '") + name + "' must be " + kind_name);
  return *it;
}

inline void only_fields(const ojson& payload, std::initializer_list<std::string_view> names) {
  for (const auto& [k, v] : payload.items()) {
    bool known = false;
    for (auto n : names) known = known || n == k;
    if (!known) violation("unexpected payload field '" + k + "'");
  }
}

}  // namespace detail

/// Checks a payload against its type's exact schema.
inline void validate_payload(MsgType type, const ojson& p) {
  using detail::field;
  using detail::only_fields;
  using V = ojson::value_t;
  if (!p.is_object()) detail::violation("payload must be an object");
  switch (type) {
    case MsgType::hello:
      only_fields(p, {"role"});
      if (!parse_role(field(p, "role", V::string, "a string").get<std::string>()))
        detail::violation("role must be 'defuser' or 'expert'");
      break;
    case MsgType::session:
      only_fields(p, {"index", "kind", "duration_s"});
      field(p, "index", V::number_integer, "an integer");
      if (!parse_session_kind(field(p, "kind", V::string, "a string").get<std::string>()))
        detail::violation("unknown session kind");
      field(p, "duration_s", V::number_float, "a number");
      break;
    case MsgType::state:
      only_fields(p, {"modules", "strikes", "terminal"});
      for (const auto& m : field(p, "modules", V::array, "an array")) {
        if (!m.is_object()) detail::violation("module entries must be objects");
        only_fields(m, {"module_id", "variant", "status", "view"});
        field(m, "module_id", V::string, "a string");
        field(m, "variant", V::string, "a string");
        field(m, "status", V::string, "a string");
        field(m, "view", V::object, "an object");
      }
      field(p, "strikes", V::number_integer, "an integer");
      field(p, "terminal", V::string, "a string");
      break;
    case MsgType::timer:
      only_fields(p, {"remaining_ms"});
      field(p, "remaining_ms", V::number_integer, "an integer");
      break;
    case MsgType::caption:
      only_fields(p, {"words", "timestamp_s"});
      for (const auto& w : field(p, "words", V::array, "an array"))
        if (!w.is_string()) detail::violation("caption words must be strings");
      field(p, "timestamp_s", V::number_float, "a number");
      break;
    case MsgType::action:
      only_fields(p, {"module_id", "detail"});
      if (field(p, "module_id", V::string, "a string").get<std::string>().empty())
        detail::violation("module_id must not be empty");
      if (field(p, "detail", V::string, "a string").get<std::string>().empty())
        detail::violation("detail must not be empty");
      break;
    case MsgType::transcript:
      only_fields(p, {"text"});
      if (field(p, "text", V::string, "a string").get<std::string>().empty())
        detail::violation("transcript text must not be empty");
      break;
    case MsgType::error:
      only_fields(p, {"code", "message"});
      field(p, "code", V::string, "a string");
      field(p, "message", V::string, "a string");
      break;
    case MsgType::bye:
      only_fields(p, {"reason"});
      field(p, "reason", V::string, "a string");
      break;
  }
}

/// Parses and validates one frame. Any deviation is a ProtocolError.
inline Message decode(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception&) {
    detail::violation("frame is not valid JSON");
  }
  if (!j.is_object()) detail::violation("frame must be an object");
  detail::only_fields(j, {"type", "seq", "payload"});
  const auto& type_field = detail::field(j, "type", ojson::value_t::string, "a string");
  auto type = parse_msg_type(type_field.get<std::string>());
  if (!type) detail::violation("unknown message type '" + type_field.get<std::string>() + "'");
  const auto& seq = detail::field(j, "seq", ojson::value_t::number_integer, "an integer");
  if (!j.contains("payload")) detail::violation("frame missing 'payload'");
  Message m{*type, seq.get<long long>(), j["payload"]};
  validate_payload(m.type, m.payload);
  return m;
}

/// Messages a client may send.
inline bool client_may_send(MsgType t) {
  return t == MsgType::hello || t == MsgType::action || t == MsgType::transcript || t == MsgType::bye;
}

// --- payload builders --------------------------------------------------------

inline ojson hello_payload(Role role) { return {{"role", to_string(role)}}; }

inline ojson session_payload(const session::SessionSpec& spec) {
  return {{"index", spec.index}, {"kind", to_string(spec.kind)}, {"duration_s", spec.duration_s}};
}

inline std::string_view terminal_name(game::Terminal t) {
  switch (t) {
    case game::Terminal::none: return "none";
    case game::Terminal::defused: return "defused";
    case game::Terminal::exploded: return "exploded";
  }
  return "none";
}

inline ojson state_payload(const game::BombState& bomb) {
  ojson modules = ojson::array();
  for (const auto& m : bomb.modules)
    modules.push_back({{"module_id", m.spec.module_id},
                       {"variant", game::variant_name(m.spec.variant)},
                       {"status", m.solved() ? "solved" : "unsolved"},
                       {"view", game::module_view(m)}});
  return {{"modules", modules}, {"strikes", bomb.strikes}, {"terminal", terminal_name(bomb.terminal)}};
}

inline ojson timer_payload(double remaining_s) {
  return {{"remaining_ms", static_cast<long long>(std::llround(std::max(0.0, remaining_s) * 1000.0))}};
}

inline ojson caption_payload(const keywords::CaptionEvent& c) {
  return {{"words", c.words}, {"timestamp_s", c.timestamp_s}};
}

inline ojson action_payload(const game::PlayerAction& a) { return {{"module_id", a.module_id}, {"detail", a.detail}}; }

inline ojson transcript_payload(const std::string& text) { return {{"text", text}}; }

inline ojson error_payload(std::string_view code, const std::string& message) {
  return {{"code", code}, {"message", message}};
}

inline ojson bye_payload(const std::string& reason) { return {{"reason", reason}}; }

/// Per-direction sequence bookkeeping.
class SeqCounter {
 public:
  long long next() { return ++last_; }
  /// Accepts seq only if it is exactly one past the previous one.
  void expect(long long seq) {
    if (seq != last_ + 1)
      detail::violation("expected seq " + std::to_string(last_ + 1) + ", got " + std::to_string(seq));
    last_ = seq;
  }
  long long last() const { return last_; }

 private:
  long long last_ = 0;
};

}  // namespace stresslab::gateway
