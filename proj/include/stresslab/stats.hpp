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

// Two-group significance test: sample standard deviation, standard error,
// t-score, degrees of freedom and a one-tailed p-value from the Student t
// distribution (regularized incomplete beta, continued fraction).

#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stresslab/error.hpp"

namespace stresslab::stats {

inline double mean(std::span<const double> values) {
  if (values.empty()) fail(Errc::TooFewValues, "mean of empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// sqrt( sum (x_i - mu)^2 / (N - 1) ).
inline double sample_sd(std::span<const double> values) {
  if (values.size() < 2) fail(Errc::TooFewValues, "sample sd needs at least 2 values");
  const double mu = mean(values);
  double ss = 0.0;
  for (double x : values) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

struct GroupSummary {
  std::string label;
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

inline GroupSummary summarize_group(std::string label, std::vector<double> values) {
  if (values.size() < 2)
    fail(Errc::TooFewValues, "group '" + label + "' needs at least 2 values");
  GroupSummary g;
  g.mean = mean(values);
  g.sd = sample_sd(values);
  g.n = static_cast<int>(values.size());
  g.label = std::move(label);
  g.values = std::move(values);
  return g;
}

/// paper_literal divides the standard deviations (not variances) by N, as the
/// formula is printed in the source material; variance_corrected is the
/// usual sqrt(sd1^2/N1 + sd2^2/N2) and is the default.
enum class SeMode { variance_corrected, paper_literal };

inline constexpr std::string_view to_string(SeMode m) {
  return m == SeMode::paper_literal ? "paper_literal" : "variance_corrected";
}

inline double standard_error(const GroupSummary& g1, const GroupSummary& g2,
                             SeMode mode = SeMode::variance_corrected) {
  const double n1 = g1.n, n2 = g2.n;
  if (mode == SeMode::paper_literal) return std::sqrt(g1.sd / n1 + g2.sd / n2);
  return std::sqrt(g1.sd * g1.sd / n1 + g2.sd * g2.sd / n2);
}

// --- Student t -------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta, modified Lentz evaluation.
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) fail(Errc::BadParameter, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) fail(Errc::BadParameter, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// P(T > t) for T ~ Student t with dof degrees of freedom.
inline double student_t_sf(double t, double dof) {
  if (!(dof > 0.0)) fail(Errc::BadParameter, "degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

inline double student_t_cdf(double t, double dof) { return 1.0 - student_t_sf(t, dof); }

/// Density of Student t; used by tests and by the quadrature cross-check.
inline double student_t_pdf(double t, double dof) {
  const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                          0.5 * std::log(dof * 3.14159265358979323846);
  return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

// --- t test ----------------------------------------------------------------

struct TTestResult {
  double t_score = 0.0;
  int dof = 0;
  double standard_error = 0.0;
  double p_one_tailed = 0.5;
  SeMode formula_mode = SeMode::variance_corrected;
};

/// t = |mu1 - mu2| / s, dof = N1 + N2 - 2, one-tailed p = P(T > t).
/// Equal means with s = 0 give t = 0 (p = 0.5); unequal means with s = 0 are
/// rejected as DegenerateSE.
inline TTestResult t_test(const GroupSummary& g1, const GroupSummary& g2,
                          SeMode mode = SeMode::variance_corrected) {
  if (g1.n < 2 || g2.n < 2) fail(Errc::TooFewValues, "each group needs at least 2 values");
  TTestResult r;
  r.formula_mode = mode;
  r.dof = g1.n + g2.n - 2;
  r.standard_error = standard_error(g1, g2, mode);
  const double diff = std::fabs(g1.mean - g2.mean);
  if (r.standard_error == 0.0) {
    if (diff != 0.0)
      fail(Errc::DegenerateSE, "zero standard error between '" + g1.label + "' and '" + g2.label +
                                   "' with different means");
    r.t_score = 0.0;
  } else {
    r.t_score = diff / r.standard_error;
  }
  r.p_one_tailed = student_t_sf(r.t_score, r.dof);
  return r;
}

}  // namespace stresslab::stats
