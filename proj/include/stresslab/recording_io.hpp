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

// .mrec container: UTF-8, one JSON object per line, "rec" selects the record
// type (decl, chunk, marker, offset). Values are written in shortest
// round-trip form, so load(save(x)) == x and re-saving is byte-identical.

#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "stresslab/error.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab {

using ojson = nlohmann::ordered_json;

inline ojson record_to_json(const Record& rec) {
  struct Visitor {
    ojson operator()(const StreamDecl& d) const {
      return ojson{{"rec", "decl"},
                   {"stream_id", d.stream_id},
                   {"name", d.name},
                   {"kind", to_string(d.kind)},
                   {"channel_count", d.channel_count},
                   {"nominal_rate_hz", d.nominal_rate_hz},
                   {"unit", d.unit}};
    }
    ojson operator()(const SignalChunk& c) const {
      return ojson{{"rec", "chunk"},
                   {"stream_id", c.stream_id},
                   {"first_timestamp_s", c.first_timestamp_s},
                   {"samples", c.samples}};
    }
    ojson operator()(const MarkerEvent& m) const {
      return ojson{{"rec", "marker"},
                   {"stream_id", m.stream_id},
                   {"timestamp_s", m.timestamp_s},
                   {"label", m.label}};
    }
    ojson operator()(const ClockOffsetRecord& o) const {
      return ojson{{"rec", "offset"},
                   {"stream_id", o.stream_id},
                   {"measured_at_s", o.measured_at_s},
                   {"offset_s", o.offset_s},
                   {"rtt_s", o.rtt_s}};
    }
  };
  return std::visit(Visitor{}, rec);
}

inline void write_recording(std::ostream& os, const Recording& recording) {
  for (const auto& rec : recording.records) os << record_to_json(rec).dump() << '\n';
}

inline std::string serialize_recording(const Recording& recording) {
  std::ostringstream os;
  write_recording(os, recording);
  return os.str();
}

inline void record_to_file(const Recording& recording, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  write_recording(os, recording);
  os.flush();
  if (!os) fail(Errc::IoError, "write to '" + path.string() + "' failed");
}

namespace detail {

template <typename T>
T field(const ojson& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end())
    fail(Errc::ParseError, "line " + std::to_string(line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(Errc::ParseError, "line " + std::to_string(line) + ": bad type for '" + key + "'");
  }
}

}  // namespace detail

/// Parses a recording. Decls must precede any record that names their stream.
inline Recording read_recording(std::istream& is) {
  Recording out;
  std::map<std::string, StreamDecl, std::less<>> declared;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) fail(Errc::ParseError, "line " + std::to_string(line) + ": not an object");
    const auto rec = detail::field<std::string>(j, "rec", line);
    const auto stream_id = detail::field<std::string>(j, "stream_id", line);

    if (rec == "decl") {
      StreamDecl d;
      d.stream_id = stream_id;
      d.name = detail::field<std::string>(j, "name", line);
      const auto kind = detail::field<std::string>(j, "kind", line);
      if (kind == "marker") {
        d.kind = StreamKind::marker;
      } else if (kind == "signal") {
        d.kind = StreamKind::signal;
      } else {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": unknown kind '" + kind + "'");
      }
      d.channel_count = detail::field<int>(j, "channel_count", line);
      d.nominal_rate_hz = detail::field<double>(j, "nominal_rate_hz", line);
      d.unit = detail::field<std::string>(j, "unit", line);
      try {
        validate_decl(d);
      } catch (const Error& e) {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
      }
      if (declared.contains(stream_id))
        fail(Errc::DuplicateStream, "line " + std::to_string(line) + ": '" + stream_id + "'");
      declared.emplace(stream_id, d);
      out.records.emplace_back(std::move(d));
      continue;
    }

    auto decl = declared.find(stream_id);
    if (rec != "chunk" && rec != "marker" && rec != "offset")
      fail(Errc::ParseError, "line " + std::to_string(line) + ": unknown rec '" + rec + "'");
    if (decl == declared.end())
      fail(Errc::DanglingStream,
           "line " + std::to_string(line) + ": stream '" + stream_id + "' is not declared");

    if (rec == "chunk") {
      SignalChunk c;
      c.stream_id = stream_id;
      c.first_timestamp_s = detail::field<double>(j, "first_timestamp_s", line);
      c.channel_count = decl->second.channel_count;
      c.samples = detail::field<std::vector<double>>(j, "samples", line);
      if (c.samples.size() % static_cast<std::size_t>(c.channel_count) != 0)
        fail(Errc::ParseError, "line " + std::to_string(line) + ": sample count not a multiple of " +
                                   std::to_string(c.channel_count));
      out.records.emplace_back(std::move(c));
    } else if (rec == "marker") {
      out.records.emplace_back(MarkerEvent{stream_id, detail::field<double>(j, "timestamp_s", line),
                                           detail::field<std::string>(j, "label", line)});
    } else {
      out.records.emplace_back(ClockOffsetRecord{stream_id,
                                                 detail::field<double>(j, "measured_at_s", line),
                                                 detail::field<double>(j, "offset_s", line),
                                                 detail::field<double>(j, "rtt_s", line)});
    }
  }
  return out;
}

inline Recording parse_recording(const std::string& text) {
  std::istringstream is(text);
  return read_recording(is);
}

inline Recording load_recording(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open '" + path.string() + "'");
  return read_recording(is);
}

}  // namespace stresslab
