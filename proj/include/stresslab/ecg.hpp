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

// ECG samples -> R peaks -> RR intervals -> heart rate and RMSSD, plus a
// seeded synthetic ECG source with known peak times.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stresslab/error.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::ecg {

inline constexpr double kMinAnalysisRateHz = 100.0;

struct EcgTrace {
  double sample_rate_hz = 250.0;
  std::vector<double> samples_mv;
  double start_timestamp_s = 0.0;

  double time_of(double sample_index) const {
    return start_timestamp_s + sample_index / sample_rate_hz;
  }
  double duration_s() const { return static_cast<double>(samples_mv.size()) / sample_rate_hz; }
};

struct RPeakList {
  std::vector<double> peak_times_s;  // strictly increasing
};

/// Successive R-R intervals in milliseconds after artifact rejection.
struct RrSeries {
  std::vector<double> intervals_ms;
  int rejected = 0;

  std::size_t n() const { return intervals_ms.size(); }
};

struct HrvSummary {
  double hr_bpm = 0.0;
  double rmssd_ms = 0.0;
  int n_intervals = 0;
  int rejected_intervals = 0;
};

// --- synthesis -------------------------------------------------------------

struct EcgCondition {
  double hr_bpm = 60.0;
  double rmssd_ms = 0.0;
};

struct SynthParams {
  double sample_rate_hz = 250.0;
  double noise_mv = 0.02;
  double spike_amplitude_mv = 1.0;
  double spike_sd_s = 0.010;
  /// Samples are rounded to this step (0.1 uV) so recordings stay compact.
  double quantum_mv = 1e-4;
};

inline constexpr double kMinRrMs = 200.0;

/// One RR interval: mean 60000/hr, Gaussian jitter with sd rmssd/sqrt(2), so
/// successive differences have RMS equal to rmssd. Draws below 200 ms are
/// redrawn.
inline double draw_rr_ms(Rng& rng, const EcgCondition& c) {
  const double mean = 60000.0 / c.hr_bpm;
  const double sd = c.rmssd_ms / std::sqrt(2.0);
  double rr = rng.normal(mean, sd);
  while (rr < kMinRrMs) rr = rng.normal(mean, sd);
  return rr;
}

/// Streaming generator: Gaussian R spikes at seeded beat times plus white
/// noise. The beat process and the noise use separate RNG streams, so the
/// output does not depend on how rendering is chunked.
///
/// The interval that follows a beat at time t is drawn from condition_at(t),
/// so rendering up to time T requires the condition schedule to be known up to
/// T + lookahead_s().
class EcgSynthesizer {
 public:
  using ConditionFn = std::function<EcgCondition(double)>;

  EcgSynthesizer(std::uint64_t seed, SynthParams params, ConditionFn condition_at,
                 double peak_horizon_s = std::numeric_limits<double>::infinity(),
                 double first_peak_floor_s = 0.0)
      : params_(params),
        condition_at_(std::move(condition_at)),
        beats_(derive_seed(seed, 1)),
        noise_(derive_seed(seed, 2)),
        horizon_(peak_horizon_s),
        first_floor_(first_peak_floor_s) {}

  double lookahead_s() const { return 6.0 * params_.spike_sd_s; }
  std::size_t samples_rendered() const { return next_sample_; }
  const std::vector<double>& peaks() const { return peaks_; }

  /// Renders the next n samples.
  std::vector<double> render(std::size_t n) {
    std::vector<double> out(n);
    const double rate = params_.sample_rate_hz;
    const double reach = lookahead_s();
    const double inv_two_var = 1.0 / (2.0 * params_.spike_sd_s * params_.spike_sd_s);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(next_sample_ + k) / rate;
      extend_peaks(t + reach);
      while (first_active_ < peaks_.size() && peaks_[first_active_] < t - reach) ++first_active_;
      double v = 0.0;
      for (std::size_t p = first_active_; p < peaks_.size() && peaks_[p] <= t + reach; ++p) {
        const double d = t - peaks_[p];
        v += params_.spike_amplitude_mv * std::exp(-d * d * inv_two_var);
      }
      v += params_.noise_mv * noise_.normal();
      out[k] = params_.quantum_mv > 0.0 ? std::round(v / params_.quantum_mv) * params_.quantum_mv : v;
    }
    next_sample_ += n;
    return out;
  }

 private:
  void extend_peaks(double until_s) {
    while (!exhausted_ && (peaks_.empty() || peaks_.back() <= until_s)) {
      const double from = peaks_.empty() ? 0.0 : peaks_.back();
      double next = from + draw_rr_ms(beats_, condition_at_(from)) / 1000.0;
      if (peaks_.empty())
        while (next < first_floor_) next += draw_rr_ms(beats_, condition_at_(next)) / 1000.0;
      if (next > horizon_) {
        exhausted_ = true;
        break;
      }
      peaks_.push_back(next);
    }
  }

  SynthParams params_;
  ConditionFn condition_at_;
  Rng beats_;
  Rng noise_;
  double horizon_;
  double first_floor_;
  bool exhausted_ = false;
  std::vector<double> peaks_;
  std::size_t first_active_ = 0;
  std::size_t next_sample_ = 0;
};

struct SyntheticEcg {
  EcgTrace trace;
  RPeakList ground_truth;
};

/// Single-condition trace. Beats are kept at least 50 ms (5 spike sd) inside
/// both ends of the trace so every true peak is a complete spike.
inline SyntheticEcg synthesize_ecg(double duration_s, double target_hr_bpm, double target_rmssd_ms,
                                   std::uint64_t seed, double sample_rate_hz = 250.0,
                                   double noise_mv = 0.02) {
  if (!(duration_s >= 10.0)) fail(Errc::BadParameter, "duration must be >= 10 s");
  if (!(target_hr_bpm >= 30.0 && target_hr_bpm <= 220.0))
    fail(Errc::BadParameter, "target heart rate must be within [30, 220] bpm");
  if (!(target_rmssd_ms >= 0.0)) fail(Errc::BadParameter, "target RMSSD must be >= 0");
  if (!(sample_rate_hz >= kMinAnalysisRateHz)) fail(Errc::BadParameter, "sample rate must be >= 100 Hz");
  if (!(noise_mv >= 0.0)) fail(Errc::BadParameter, "noise must be >= 0");

  SynthParams params;
  params.sample_rate_hz = sample_rate_hz;
  params.noise_mv = noise_mv;
  const double margin = 5.0 * params.spike_sd_s;
  const EcgCondition cond{target_hr_bpm, target_rmssd_ms};
  EcgSynthesizer synth(seed, params, [cond](double) { return cond; }, duration_s - margin, margin);

  SyntheticEcg out;
  out.trace.sample_rate_hz = sample_rate_hz;
  out.trace.start_timestamp_s = 0.0;
  out.trace.samples_mv = synth.render(static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz)));
  out.ground_truth.peak_times_s = synth.peaks();
  return out;
}

// --- detection and metrics -------------------------------------------------

struct DetectParams {
  double min_height_mv = 0.5;
  double min_separation_ms = 250.0;
};

/// Local maxima at or above min_height, thinned so no two kept peaks are
/// closer than min_separation (taller peaks win), each refined to sub-sample
/// time with a parabola through the three samples around the maximum.
inline RPeakList detect_r_peaks(const EcgTrace& trace, double min_height_mv = 0.5,
                                double min_separation_ms = 250.0) {
  if (trace.samples_mv.empty()) fail(Errc::EmptyInput, "empty trace");
  if (!(trace.sample_rate_hz >= kMinAnalysisRateHz))
    fail(Errc::BadParameter, "sample rate below 100 Hz");
  const auto& x = trace.samples_mv;
  const std::size_t n = x.size();

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (x[i] >= min_height_mv && x[i] > x[i - 1] && x[i] >= x[i + 1]) candidates.push_back(i);

  const double min_gap = min_separation_ms / 1000.0 * trace.sample_rate_hz;
  std::vector<std::size_t> by_height(candidates.size());
  std::iota(by_height.begin(), by_height.end(), std::size_t{0});
  std::stable_sort(by_height.begin(), by_height.end(),
                   [&](std::size_t a, std::size_t b) { return x[candidates[a]] > x[candidates[b]]; });
  std::vector<bool> removed(candidates.size(), false);
  for (std::size_t c : by_height) {
    if (removed[c]) continue;
    const double pos = static_cast<double>(candidates[c]);
    for (std::size_t j = c; j-- > 0 && pos - static_cast<double>(candidates[j]) < min_gap;) removed[j] = true;
    for (std::size_t j = c + 1; j < candidates.size() && static_cast<double>(candidates[j]) - pos < min_gap; ++j)
      removed[j] = true;
  }

  RPeakList out;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (removed[c]) continue;
    const std::size_t i = candidates[c];
    const double a = x[i - 1], b = x[i], d = x[i + 1];
    const double denom = a - 2.0 * b + d;
    double delta = denom != 0.0 ? 0.5 * (a - d) / denom : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    out.peak_times_s.push_back(trace.time_of(static_cast<double>(i) + delta));
  }
  return out;
}

inline RPeakList detect_r_peaks(const EcgTrace& trace, const DetectParams& p) {
  return detect_r_peaks(trace, p.min_height_mv, p.min_separation_ms);
}

inline constexpr double kRrMinMs = 200.0;
inline constexpr double kRrMaxMs = 3000.0;

/// Successive peak differences in ms. Intervals outside (200, 3000) ms are
/// dropped and counted in `rejected`.
inline RrSeries rr_intervals(const RPeakList& peaks) {
  const auto& t = peaks.peak_times_s;
  if (t.size() < 2) fail(Errc::TooFewPeaks, "need at least 2 peaks, got " + std::to_string(t.size()));
  RrSeries rr;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double ms = (t[i] - t[i - 1]) * 1000.0;
    if (ms > kRrMinMs && ms < kRrMaxMs) {
      rr.intervals_ms.push_back(ms);
    } else {
      ++rr.rejected;
    }
  }
  return rr;
}

/// Root mean square of successive interval differences:
/// sqrt( sum_{i=1}^{n-1} (t_i - t_{i+1})^2 / (n - 1) ).
inline double rmssd(std::span<const double> intervals_ms) {
  const std::size_t n = intervals_ms.size();
  if (n < 2) fail(Errc::TooFewIntervals, "RMSSD needs at least 2 intervals");
  double y = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = intervals_ms[i] - intervals_ms[i + 1];
    y += d * d;
  }
  return std::sqrt(y / static_cast<double>(n - 1));
}

inline double rmssd(const RrSeries& rr) { return rmssd(rr.intervals_ms); }

inline double mean_interval_ms(std::span<const double> intervals_ms) {
  if (intervals_ms.empty()) fail(Errc::TooFewIntervals, "no intervals");
  return std::accumulate(intervals_ms.begin(), intervals_ms.end(), 0.0) /
         static_cast<double>(intervals_ms.size());
}

inline double heart_rate_bpm(std::span<const double> intervals_ms) {
  return 60000.0 / mean_interval_ms(intervals_ms);
}

inline double heart_rate_bpm(const RrSeries& rr) { return heart_rate_bpm(rr.intervals_ms); }

/// HR and RMSSD of one trace, or nullopt when fewer than 2 intervals survive
/// (RMSSD is undefined there). rejected_out receives the rejection count
/// either way.
inline std::optional<HrvSummary> summarize(const EcgTrace& trace, const DetectParams& params = {},
                                           int* rejected_out = nullptr) {
  if (rejected_out) *rejected_out = 0;
  if (trace.samples_mv.empty()) return std::nullopt;
  const RPeakList peaks = detect_r_peaks(trace, params);
  if (peaks.peak_times_s.size() < 2) return std::nullopt;
  const RrSeries rr = rr_intervals(peaks);
  if (rejected_out) *rejected_out = rr.rejected;
  if (rr.n() < 2) return std::nullopt;
  return HrvSummary{heart_rate_bpm(rr), rmssd(rr), static_cast<int>(rr.n()), rr.rejected};
}

}  // namespace stresslab::ecg
