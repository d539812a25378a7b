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

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stresslab/error.hpp"
#include "stresslab/rng.hpp"

namespace stresslab {

/// One offset measurement between a stream's sender clock and the recorder
/// clock. offset_s is sender minus recorder.
struct ClockOffsetRecord {
  std::string stream_id;
  double measured_at_s = 0.0;  // recorder clock
  double offset_s = 0.0;
  double rtt_s = 0.0;

  /// Half the round trip of the probe the estimate came from; the estimate is
  /// within this distance of the true offset for any split of the delay.
  double uncertainty_s() const { return rtt_s / 2.0; }

  bool operator==(const ClockOffsetRecord&) const = default;
};

/// A request/response exchange. t_send and t_recv are read on the recorder
/// clock, t_remote on the sender clock.
struct ClockProbe {
  double t_send = 0.0;
  double t_remote = 0.0;
  double t_recv = 0.0;

  double rtt() const { return t_recv - t_send; }
};

/// NTP-style estimate: take the probe with the smallest round trip and assume
/// the remote timestamp was taken halfway through it.
inline ClockOffsetRecord estimate_clock_offset(std::span<const ClockProbe> probes,
                                               std::string stream_id = {}) {
  if (probes.empty()) fail(Errc::NoProbes, "clock offset estimate needs at least one probe");
  const auto best = std::min_element(probes.begin(), probes.end(),
                                     [](const ClockProbe& a, const ClockProbe& b) {
                                       return a.rtt() < b.rtt();
                                     });
  ClockOffsetRecord rec;
  rec.stream_id = std::move(stream_id);
  rec.measured_at_s = 0.5 * (best->t_send + best->t_recv);
  rec.offset_s = best->t_remote - 0.5 * (best->t_send + best->t_recv);
  rec.rtt_s = std::max(0.0, best->rtt());
  return rec;
}

/// Piecewise-linear offset curve over a stream's offset records, used to map
/// sender timestamps into the recorder clock. Outside the measured range the
/// nearest sample is held constant; with no samples the mapping is identity.
class ClockMap {
 public:
  ClockMap() = default;

  explicit ClockMap(std::vector<ClockOffsetRecord> records) {
    points_.reserve(records.size());
    for (const auto& r : records) points_.emplace_back(r.measured_at_s, r.offset_s);
    std::stable_sort(points_.begin(), points_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  bool empty() const { return points_.empty(); }

  /// Offset at a recorder-clock time.
  double offset_at(double recorder_t) const {
    if (points_.empty()) return 0.0;
    if (recorder_t <= points_.front().first) return points_.front().second;
    if (recorder_t >= points_.back().first) return points_.back().second;
    const auto hi = std::upper_bound(points_.begin(), points_.end(), recorder_t,
                                     [](double t, const auto& p) { return t < p.first; });
    const auto lo = hi - 1;
    const double span = hi->first - lo->first;
    if (span <= 0.0) return hi->second;
    const double w = (recorder_t - lo->first) / span;
    return lo->second + w * (hi->second - lo->second);
  }

  /// Sender clock -> recorder clock. The offset curve is indexed by recorder
  /// time, so the lookup point is refined once from the first guess.
  double to_recorder(double sender_t) const {
    if (points_.empty()) return sender_t;
    const double guess = sender_t - offset_at(sender_t);
    return sender_t - offset_at(guess);
  }

 private:
  std::vector<std::pair<double, double>> points_;
};

/// Seeded model of a two-way link to a device whose clock runs at a fixed
/// offset from the recorder. Each direction gets an independent delay drawn
/// uniformly from [min_delay_s, max_delay_s].
class SimulatedLink {
 public:
  SimulatedLink(double true_offset_s, double min_delay_s, double max_delay_s, std::uint64_t seed)
      : offset_(true_offset_s), min_delay_(min_delay_s), max_delay_(max_delay_s), rng_(seed) {}

  double true_offset() const { return offset_; }

  ClockProbe probe(double t_send) {
    const double out = rng_.uniform(min_delay_, max_delay_);
    const double back = rng_.uniform(min_delay_, max_delay_);
    return ClockProbe{t_send, t_send + out + offset_, t_send + out + back};
  }

  std::vector<ClockProbe> probes(double t_send, int count, double spacing_s) {
    std::vector<ClockProbe> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(probe(t_send + i * spacing_s));
    return out;
  }

 private:
  double offset_;
  double min_delay_;
  double max_delay_;
  Rng rng_;
};

}  // namespace stresslab
