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

// SVG output: condition bar charts with sd error bars, and an ECG overlay
// with session/game marker lines and caption labels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stresslab/analysis.hpp"
#include "stresslab/markers.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab::plots {

// Fixed-precision formatting keeps the SVG text stable across runs.
inline std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> error;
};

/// Vertical bars from zero with symmetric error whiskers.
inline std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars) {
  constexpr double W = 480, H = 360, left = 70, right = 20, top = 40, bottom = 50;
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  double ymax = 0.0;
  for (const auto& b : bars) ymax = std::max(ymax, b.value + b.error.value_or(0.0));
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.1;
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - v / ymax); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n"
      << "<text transform=\"translate(18," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = ymax * i / 5.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << num(y_of(v) + 4) << "\" text-anchor=\"end\">" << num(v, 1)
        << "</text>\n";
  }
  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.5;
    svg << "<rect class=\"bar\" x=\"" << num(cx - bw / 2) << "\" y=\"" << num(y_of(b.value)) << "\" width=\""
        << num(bw) << "\" height=\"" << num(top + plot_h - y_of(b.value)) << "\" fill=\"#4c72b0\"/>\n";
    if (b.error) {
      const double lo = y_of(std::max(0.0, b.value - *b.error)), hi = y_of(b.value + *b.error);
      svg << "<g class=\"error\" stroke=\"black\">"
          << "<line x1=\"" << num(cx) << "\" y1=\"" << num(lo) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(hi)
          << "\"/>"
          << "<line x1=\"" << num(cx - 8) << "\" y1=\"" << num(hi) << "\" x2=\"" << num(cx + 8) << "\" y2=\""
          << num(hi) << "\"/>"
          << "<line x1=\"" << num(cx - 8) << "\" y1=\"" << num(lo) << "\" x2=\"" << num(cx + 8) << "\" y2=\""
          << num(lo) << "\"/></g>\n";
    }
    svg << "<text x=\"" << num(cx) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
        << escape(b.label) << "</text>\n"
        << "<text x=\"" << num(cx) << "\" y=\"" << num(y_of(b.value) - 6) << "\" text-anchor=\"middle\">"
        << num(b.value, 1) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::string hr_bars(const std::vector<analysis::ConditionReport>& reps) {
  std::vector<Bar> bars;
  for (const auto& r : reps) bars.push_back({std::string(to_string(r.condition)), r.mean_hr_bpm, r.sd_hr_bpm});
  return bar_chart("Average heart rate", "heart rate (bpm)", bars);
}

inline std::string hrv_bars(const std::vector<analysis::ConditionReport>& reps) {
  std::vector<Bar> bars;
  for (const auto& r : reps) bars.push_back({std::string(to_string(r.condition)), r.mean_rmssd_ms, r.sd_rmssd_ms});
  return bar_chart("Average HRV (RMSSD)", "RMSSD (ms)", bars);
}

/// ECG drawn as a per-column min/max envelope, with a vertical line per
/// marker (session boundaries dark, game events light) and caption words
/// written above the trace.
inline std::string overlay(const Recording& rec, int width = 1600, int height = 400) {
  const auto streams = analysis::choose_streams(rec);
  const ClockMap map = rec.clock_map(streams.signal.stream_id);
  const double rate = streams.signal.nominal_rate_hz;
  const auto chunks = rec.chunks(streams.signal.stream_id);
  const auto markers = rec.markers_in_recorder_clock(streams.markers.stream_id);

  double t_min = std::numeric_limits<double>::infinity(), t_max = -t_min;
  double v_min = t_min, v_max = -t_min;
  for (const auto& c : chunks) {
    const double t0 = map.to_recorder(c.first_timestamp_s);
    t_min = std::min(t_min, t0);
    t_max = std::max(t_max, t0 + static_cast<double>(c.sample_count()) / rate);
    for (std::size_t i = 0; i < c.sample_count(); ++i) {
      v_min = std::min(v_min, c.at(i));
      v_max = std::max(v_max, c.at(i));
    }
  }
  for (const auto& m : markers) {
    t_min = std::min(t_min, m.timestamp_s);
    t_max = std::max(t_max, m.timestamp_s);
  }
  if (!std::isfinite(t_min) || t_max <= t_min) {
    t_min = 0.0;
    t_max = 1.0;
  }
  if (!std::isfinite(v_min) || v_max <= v_min) {
    v_min = -1.0;
    v_max = 1.0;
  }

  const double left = 50, right = 10, top = 60, bottom = 30;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const auto x_of = [&](double t) { return left + plot_w * (t - t_min) / (t_max - t_min); };
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - v_min) / (v_max - v_min)); };

  const auto cols = static_cast<std::size_t>(plot_w);
  std::vector<double> lo(cols, std::numeric_limits<double>::infinity()), hi(cols, -std::numeric_limits<double>::infinity());
  for (const auto& c : chunks) {
    const double t0 = map.to_recorder(c.first_timestamp_s);
    for (std::size_t i = 0; i < c.sample_count(); ++i) {
      const double x = x_of(t0 + static_cast<double>(i) / rate) - left;
      const auto col = std::min(cols - 1, static_cast<std::size_t>(std::max(0.0, x)));
      lo[col] = std::min(lo[col], c.at(i));
      hi[col] = std::max(hi[col], c.at(i));
    }
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">ECG with event markers</text>\n";

  for (const auto& m : markers) {
    auto parsed = parse_marker(m.label);
    if (!parsed) continue;
    const double x = x_of(m.timestamp_s);
    if (const auto* cap = std::get_if<marker::Caption>(&*parsed)) {
      svg << "<text class=\"caption\" x=\"" << num(x) << "\" y=\"" << top - 6
          << "\" fill=\"#c44e52\" transform=\"rotate(-30 " << num(x) << ' ' << top - 6 << ")\">"
          << escape(cap->word) << "</text>\n";
      continue;
    }
    const bool session = std::holds_alternative<marker::SessionStart>(*parsed) ||
                         std::holds_alternative<marker::SessionEnd>(*parsed);
    svg << "<line class=\"marker\" x1=\"" << num(x) << "\" y1=\"" << top << "\" x2=\"" << num(x) << "\" y2=\""
        << top + plot_h << "\" stroke=\"" << (session ? "#333333" : "#55a868") << "\" stroke-width=\""
        << (session ? "1" : "0.5") << "\"><title>" << escape(m.label) << "</title></line>\n";
    if (const auto* s = std::get_if<marker::SessionStart>(&*parsed))
      svg << "<text x=\"" << num(x + 2) << "\" y=\"" << top + 12 << "\">" << to_string(s->kind) << ' ' << s->index
          << "</text>\n";
  }

  svg << "<path class=\"ecg\" fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"0.6\" d=\"";
  bool pen = false;
  for (std::size_t c = 0; c < cols; ++c) {
    if (!std::isfinite(lo[c])) {
      pen = false;
      continue;
    }
    const double x = left + static_cast<double>(c);
    svg << (pen ? " L" : " M") << num(x, 1) << ' ' << num(y_of(lo[c]), 1) << " L" << num(x, 1) << ' '
        << num(y_of(hi[c]), 1);
    pen = true;
  }
  svg << "\"/>\n"
      << "<text x=\"" << left << "\" y=\"" << height - 8 << "\">" << num(t_min, 1) << " s</text>\n"
      << "<text x=\"" << width - right << "\" y=\"" << height - 8 << "\" text-anchor=\"end\">" << num(t_max, 1)
      << " s</text>\n"
      << "</svg>\n";
  return svg.str();
}

}  // namespace stresslab::plots
