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

// In-process stream layer: outlets publish timestamped markers or sample
// chunks, inlets subscribe to a stream, and the hub's recorder keeps every
// declaration, chunk, marker and clock-offset record in arrival order.
//
// Timestamps are seconds on the producer's clock. Cross-stream comparison is
// only meaningful after mapping through the stream's ClockMap.

#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stresslab/clock_offset.hpp"
#include "stresslab/error.hpp"
#include "stresslab/markers.hpp"

namespace stresslab {

enum class StreamKind { marker, signal };

inline constexpr std::string_view to_string(StreamKind kind) {
  return kind == StreamKind::marker ? "marker" : "signal";
}

/// Marker streams with this unit carry free text (e.g. raw transcripts) and
/// are exempt from the marker grammar.
inline constexpr std::string_view kFreeTextUnit = "text";

struct StreamDecl {
  std::string stream_id;
  std::string name;
  StreamKind kind = StreamKind::marker;
  int channel_count = 1;
  double nominal_rate_hz = 0.0;
  std::string unit;

  bool free_text() const { return kind == StreamKind::marker && unit == kFreeTextUnit; }

  bool operator==(const StreamDecl&) const = default;
};

struct MarkerEvent {
  std::string stream_id;
  double timestamp_s = 0.0;
  std::string label;

  bool operator==(const MarkerEvent&) const = default;
};

/// Row-major block of samples; sample i is at first_timestamp_s + i / rate.
struct SignalChunk {
  std::string stream_id;
  double first_timestamp_s = 0.0;
  int channel_count = 1;
  std::vector<double> samples;

  std::size_t sample_count() const {
    return channel_count > 0 ? samples.size() / static_cast<std::size_t>(channel_count) : 0;
  }
  double at(std::size_t sample, int channel = 0) const {
    return samples[sample * static_cast<std::size_t>(channel_count) +
                   static_cast<std::size_t>(channel)];
  }

  bool operator==(const SignalChunk&) const = default;
};

using Record = std::variant<StreamDecl, SignalChunk, MarkerEvent, ClockOffsetRecord>;

inline const std::string& record_stream_id(const Record& r) {
  return std::visit([](const auto& v) -> const std::string& { return v.stream_id; }, r);
}

inline void validate_decl(const StreamDecl& decl) {
  if (decl.stream_id.empty()) fail(Errc::BadParameter, "stream_id must not be empty");
  if (decl.channel_count < 1) fail(Errc::BadParameter, "channel_count must be positive");
  if (!(decl.nominal_rate_hz >= 0.0)) fail(Errc::BadParameter, "nominal_rate_hz must be >= 0");
  if (decl.kind == StreamKind::marker && (decl.channel_count != 1 || decl.nominal_rate_hz != 0.0))
    fail(Errc::BadParameter, "marker stream '" + decl.stream_id +
                                 "' must have channel_count 1 and nominal_rate_hz 0");
  if (decl.kind == StreamKind::signal && decl.nominal_rate_hz <= 0.0)
    fail(Errc::BadParameter, "signal stream '" + decl.stream_id + "' needs a positive rate");
}

/// Everything a recorder captured, in arrival order.
struct Recording {
  std::vector<Record> records;

  const StreamDecl* find_decl(std::string_view stream_id) const {
    for (const auto& r : records)
      if (const auto* d = std::get_if<StreamDecl>(&r); d && d->stream_id == stream_id) return d;
    return nullptr;
  }

  std::vector<StreamDecl> decls() const {
    std::vector<StreamDecl> out;
    for (const auto& r : records)
      if (const auto* d = std::get_if<StreamDecl>(&r)) out.push_back(*d);
    return out;
  }

  /// Raw markers on the sender clock.
  std::vector<MarkerEvent> markers(std::string_view stream_id) const {
    std::vector<MarkerEvent> out;
    for (const auto& r : records)
      if (const auto* m = std::get_if<MarkerEvent>(&r); m && m->stream_id == stream_id)
        out.push_back(*m);
    return out;
  }

  std::vector<SignalChunk> chunks(std::string_view stream_id) const {
    std::vector<SignalChunk> out;
    for (const auto& r : records)
      if (const auto* c = std::get_if<SignalChunk>(&r); c && c->stream_id == stream_id)
        out.push_back(*c);
    return out;
  }

  std::vector<ClockOffsetRecord> offsets(std::string_view stream_id) const {
    std::vector<ClockOffsetRecord> out;
    for (const auto& r : records)
      if (const auto* o = std::get_if<ClockOffsetRecord>(&r); o && o->stream_id == stream_id)
        out.push_back(*o);
    return out;
  }

  ClockMap clock_map(std::string_view stream_id) const { return ClockMap(offsets(stream_id)); }

  double to_recorder_clock(std::string_view stream_id, double sender_t) const {
    return clock_map(stream_id).to_recorder(sender_t);
  }

  /// Markers with timestamps mapped into the recorder clock.
  std::vector<MarkerEvent> markers_in_recorder_clock(std::string_view stream_id) const {
    const ClockMap map = clock_map(stream_id);
    auto out = markers(stream_id);
    for (auto& m : out) m.timestamp_s = map.to_recorder(m.timestamp_s);
    return out;
  }

  bool operator==(const Recording&) const = default;
};

namespace detail {

struct InletQueue {
  std::string stream_id;
  std::deque<Record> pending;
};

struct StreamState {
  StreamDecl decl;
  std::optional<double> last_timestamp;
  std::vector<std::weak_ptr<InletQueue>> inlets;
};

struct HubState {
  std::mutex mutex;
  std::map<std::string, StreamState, std::less<>> streams;
  Recording recording;

  void deliver(StreamState& stream, const Record& rec) {
    recording.records.push_back(rec);
    auto& inlets = stream.inlets;
    inlets.erase(std::remove_if(inlets.begin(), inlets.end(),
                                [](const auto& w) { return w.expired(); }),
                 inlets.end());
    for (const auto& w : inlets)
      if (auto q = w.lock()) q->pending.push_back(rec);
  }
};

}  // namespace detail

/// Subscription to one stream. Receives every record pushed after it opened,
/// exactly once and in push order.
class Inlet {
 public:
  const std::string& stream_id() const { return queue_->stream_id; }

  std::optional<Record> try_pull() {
    std::lock_guard lock(hub_->mutex);
    if (queue_->pending.empty()) return std::nullopt;
    Record r = std::move(queue_->pending.front());
    queue_->pending.pop_front();
    return r;
  }

  std::vector<Record> pull_all() {
    std::lock_guard lock(hub_->mutex);
    std::vector<Record> out(std::make_move_iterator(queue_->pending.begin()),
                            std::make_move_iterator(queue_->pending.end()));
    queue_->pending.clear();
    return out;
  }

 private:
  friend class StreamHub;
  Inlet(std::shared_ptr<detail::HubState> hub, std::shared_ptr<detail::InletQueue> queue)
      : hub_(std::move(hub)), queue_(std::move(queue)) {}

  std::shared_ptr<detail::HubState> hub_;
  std::shared_ptr<detail::InletQueue> queue_;
};

/// Producer handle for one stream. Pushes on a single outlet must be
/// serialized by the caller; distinct outlets may push concurrently.
class Outlet {
 public:
  const StreamDecl& decl() const { return decl_; }
  const std::string& stream_id() const { return decl_.stream_id; }

  void push_marker(std::string label, double timestamp_s) {
    if (decl_.kind != StreamKind::marker)
      fail(Errc::KindMismatch, "stream '" + decl_.stream_id + "' is not a marker stream");
    if (!decl_.free_text() && !is_valid_marker(label))
      fail(Errc::InvalidMarker, "label '" + label + "' does not match the marker grammar");
    std::lock_guard lock(hub_->mutex);
    auto& stream = state();
    check_monotonic(stream, timestamp_s);
    stream.last_timestamp = timestamp_s;
    hub_->deliver(stream, MarkerEvent{decl_.stream_id, timestamp_s, std::move(label)});
  }

  void push_marker(const Marker& m, double timestamp_s) { push_marker(format_marker(m), timestamp_s); }

  /// Appends a chunk. An empty chunk is accepted and ignored.
  void push_chunk(double first_timestamp_s, std::vector<double> samples) {
    if (decl_.kind != StreamKind::signal)
      fail(Errc::KindMismatch, "stream '" + decl_.stream_id + "' is not a signal stream");
    if (samples.size() % static_cast<std::size_t>(decl_.channel_count) != 0)
      fail(Errc::ShapeMismatch, "chunk of " + std::to_string(samples.size()) +
                                    " values does not divide into " +
                                    std::to_string(decl_.channel_count) + " channels");
    if (samples.empty()) return;
    std::lock_guard lock(hub_->mutex);
    auto& stream = state();
    check_monotonic(stream, first_timestamp_s);
    const auto n = samples.size() / static_cast<std::size_t>(decl_.channel_count);
    stream.last_timestamp = first_timestamp_s + static_cast<double>(n - 1) / decl_.nominal_rate_hz;
    hub_->deliver(stream, SignalChunk{decl_.stream_id, first_timestamp_s, decl_.channel_count,
                                      std::move(samples)});
  }

  void push_chunk(const SignalChunk& chunk) {
    if (chunk.stream_id != decl_.stream_id && !chunk.stream_id.empty())
      fail(Errc::UnknownStream, "chunk for '" + chunk.stream_id + "' pushed to '" +
                                    decl_.stream_id + "'");
    if (chunk.channel_count != decl_.channel_count)
      fail(Errc::ShapeMismatch, "chunk has " + std::to_string(chunk.channel_count) +
                                    " channels, stream declares " +
                                    std::to_string(decl_.channel_count));
    push_chunk(chunk.first_timestamp_s, chunk.samples);
  }

 private:
  friend class StreamHub;
  Outlet(std::shared_ptr<detail::HubState> hub, StreamDecl decl)
      : hub_(std::move(hub)), decl_(std::move(decl)) {}

  detail::StreamState& state() { return hub_->streams.find(decl_.stream_id)->second; }

  void check_monotonic(const detail::StreamState& stream, double t) const {
    if (stream.last_timestamp && t < *stream.last_timestamp)
      fail(Errc::NonMonotonicTimestamp, "stream '" + decl_.stream_id + "': " + std::to_string(t) +
                                            " < " + std::to_string(*stream.last_timestamp));
  }

  std::shared_ptr<detail::HubState> hub_;
  StreamDecl decl_;
};

/// Registry of streams plus the recorder. Handles share ownership of the hub
/// state, so they may outlive the StreamHub object and move between threads.
class StreamHub {
 public:
  StreamHub() : state_(std::make_shared<detail::HubState>()) {}

  Outlet create_outlet(StreamDecl decl) {
    validate_decl(decl);
    std::lock_guard lock(state_->mutex);
    if (state_->streams.contains(decl.stream_id))
      fail(Errc::DuplicateStream, "stream '" + decl.stream_id + "' already registered");
    auto& stream = state_->streams[decl.stream_id];
    stream.decl = decl;
    state_->recording.records.emplace_back(decl);
    return Outlet(state_, std::move(decl));
  }

  Inlet open_inlet(std::string_view stream_id) {
    std::lock_guard lock(state_->mutex);
    auto it = state_->streams.find(stream_id);
    if (it == state_->streams.end())
      fail(Errc::UnknownStream, "no stream '" + std::string(stream_id) + "'");
    auto queue = std::make_shared<detail::InletQueue>();
    queue->stream_id = std::string(stream_id);
    it->second.inlets.push_back(queue);
    return Inlet(state_, std::move(queue));
  }

  std::optional<StreamDecl> find(std::string_view stream_id) const {
    std::lock_guard lock(state_->mutex);
    auto it = state_->streams.find(stream_id);
    if (it == state_->streams.end()) return std::nullopt;
    return it->second.decl;
  }

  void record_offset(ClockOffsetRecord rec) {
    std::lock_guard lock(state_->mutex);
    if (!state_->streams.contains(rec.stream_id))
      fail(Errc::UnknownStream, "offset for unknown stream '" + rec.stream_id + "'");
    state_->recording.records.emplace_back(std::move(rec));
  }

  /// Snapshot of everything recorded so far.
  Recording recording() const {
    std::lock_guard lock(state_->mutex);
    return state_->recording;
  }

 private:
  std::shared_ptr<detail::HubState> state_;
};

}  // namespace stresslab
