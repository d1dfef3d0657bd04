// Copyright 2026 The claimcal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Temporal and bibliometric claim features.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include <gsl/gsl_multimin.h>

#include "claimcal/common.hpp"
#include "claimcal/corpus.hpp"

namespace claimcal {

enum class Variant { Strict, RightContinuous };

inline const char* to_string(Variant v) { return v == Variant::Strict ? "strict" : "rc"; }

/// nu(t): claims on the interaction published in year t.
inline std::size_t claim_count(const ClaimCorpus& corpus, const InteractionKey& a, int t) {
  std::size_t n = 0;
  for (const auto& c : corpus.at(a).claims) n += (c.year == t);
  return n;
}

inline std::size_t claim_popularity(const ClaimCorpus& corpus, const InteractionKey& a, int t, Window w,
                                    Variant v) {
  std::size_t n = 0;
  for (const auto& c : corpus.at(a).claims) n += w.contains(c.year, t, v == Variant::Strict);
  return n;
}

inline int first_claim_year(const InteractionRecord& rec) {
  if (rec.claims.empty()) throw Error("no claims for " + rec.key.str());
  int t0 = rec.claims.front().year;
  for (const auto& c : rec.claims) t0 = std::min(t0, c.year);
  return t0;
}

/// CP / (t - t0 + 1), t0 the first claim year on the interaction.
inline double claim_density(const ClaimCorpus& corpus, const InteractionKey& a, int t, Window w, Variant v) {
  const int t0 = first_claim_year(corpus.at(a));
  if (t < t0) throw Error("claim density requested before the first claim on " + a.str());
  return static_cast<double>(claim_popularity(corpus, a, t, w, v)) / static_cast<double>(t - t0 + 1);
}

/// One-sample KS statistic of points in [0,1] against the uniform law.
inline double ks_uniform(std::vector<double> x) {
  if (x.empty()) return kMissing;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - xi, xi - static_cast<double>(i) / n});
  }
  return d;
}

/// Left end of the FLAT window, anchored at the first claim: t0 - w, or t0 - 1
/// when the window is unbounded.
inline int flatness_origin(int t0, Window w) { return w.is_unbounded() ? t0 - 1 : t0 - w.length(); }

/// KS distance between claim years in (L, t] (or (L, t)) rescaled by (y - L)/(t - L)
/// and the uniform law, with L = flatness_origin(t0, w).
inline double flatness(const ClaimCorpus& corpus, const InteractionKey& a, int t, Window w, Variant v) {
  const auto& rec = corpus.at(a);
  const int t0 = first_claim_year(rec);
  const int L = flatness_origin(t0, w);
  if (t <= L) return kMissing;
  std::vector<double> x;
  for (const auto& c : rec.claims) {
    const bool in = c.year > L && (v == Variant::Strict ? c.year < t : c.year <= t);
    if (in) x.push_back(static_cast<double>(c.year - L) / static_cast<double>(t - L));
  }
  return ks_uniform(std::move(x));
}

inline int history_length(const ClaimCorpus& corpus, const InteractionKey& a) {
  const auto& rec = corpus.at(a);
  if (rec.claims.empty()) throw Error("no claims for " + a.str());
  int lo = rec.claims.front().year, hi = lo;
  for (const auto& c : rec.claims) {
    lo = std::min(lo, c.year);
    hi = std::max(hi, c.year);
  }
  return hi - lo;
}

struct ClaimPercentile {
  double mcp = kMissing;
  double ammcp = kMissing;
};

/// Share of interactions whose mean claim is strictly below this one's.
inline ClaimPercentile mean_claim_percentile(const std::map<InteractionKey, double>& all_means,
                                             const InteractionKey& a) {
  auto it = all_means.find(a);
  if (it == all_means.end()) throw Error("no mean claim for " + a.str());
  std::size_t below = 0;
  for (const auto& [k, m] : all_means) below += (m < it->second);
  ClaimPercentile p;
  p.mcp = static_cast<double>(below) / static_cast<double>(all_means.size());
  p.ammcp = std::abs(p.mcp - 0.5);
  return p;
}

/// Percentiles for many queries against one sorted reference set.
class PercentileIndex {
 public:
  explicit PercentileIndex(std::vector<double> values) : sorted_(std::move(values)) {
    std::sort(sorted_.begin(), sorted_.end());
  }
  ClaimPercentile operator()(double m) const {
    const auto below = std::lower_bound(sorted_.begin(), sorted_.end(), m) - sorted_.begin();
    ClaimPercentile p;
    p.mcp = static_cast<double>(below) / static_cast<double>(sorted_.size());
    p.ammcp = std::abs(p.mcp - 0.5);
    return p;
  }

 private:
  std::vector<double> sorted_;
};

// Citation history fit ----------------------------------------------------------

enum class LognormalExponent {
  AsPrinted,  // exp(-(ln t - mu)^2 / (2 sigma))
  Standard,   // exp(-(ln t - mu)^2 / (2 sigma^2))
};

inline double lognormal_shape(double t, double mu, double sigma, LognormalExponent e) {
  const double z = std::log(t) - mu;
  const double denom = e == LognormalExponent::AsPrinted ? 2.0 * sigma : 2.0 * sigma * sigma;
  return std::exp(-z * z / denom) / (t * sigma * std::sqrt(2.0 * std::numbers::pi));
}

struct CitationFit {
  double mu = 0.0;
  double sigma = 1.0;
  double amplitude = 0.0;
  double residual = kMissing;
  bool success = false;
};

struct CitationFitOptions {
  LognormalExponent exponent = LognormalExponent::AsPrinted;
  int random_starts = 4;
  std::uint64_t seed = 0;
};

inline constexpr double kMuMin = -1.0, kMuMax = 4.0, kSigmaMin = 0.05, kSigmaMax = 3.0;

namespace detail {

struct FitData {
  std::vector<double> t, c;
  double total = 0.0;
  LognormalExponent exponent;
};

inline double fit_sse(const FitData& d, double mu, double sigma, double amp) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double r = d.c[i] - amp * lognormal_shape(d.t[i], mu, sigma, d.exponent);
    s += r * r;
  }
  return s;
}

// Outside the parameter box the objective is a large barrier growing with the violation.
inline double fit_objective(const gsl_vector* x, void* params) {
  const auto& d = *static_cast<const FitData*>(params);
  const double mu = gsl_vector_get(x, 0), sigma = gsl_vector_get(x, 1), amp = gsl_vector_get(x, 2);
  const double amp_lo = d.total, amp_hi = 20.0 * d.total;
  double pen = 0.0;
  auto box = [&](double v, double lo, double hi, double scale) {
    if (v < lo) pen += (lo - v) / scale;
    if (v > hi) pen += (v - hi) / scale;
  };
  box(mu, kMuMin, kMuMax, 1.0);
  box(sigma, kSigmaMin, kSigmaMax, 0.1);
  box(amp, amp_lo, amp_hi, d.total);
  if (pen > 0.0) return 1e6 * (1.0 + pen) * (1.0 + d.total * d.total);
  return fit_sse(d, mu, sigma, amp);
}

}  // namespace detail

/// Least-squares fit of yearly citation counts c_t ~ A * lognormal(t; mu, sigma),
/// t = years since publication + 1, by multi-start Nelder-Mead within
/// mu in [-1,4], sigma in [0.05,3], A in [sum c, 20 sum c].
inline CitationFit fit_citation_lognormal(const std::map<int, double>& history, int pub_year,
                                          const CitationFitOptions& opt = {}) {
  detail::FitData d;
  d.exponent = opt.exponent;
  double norm2 = 0.0;
  for (const auto& [y, c] : history) {
    const int t = y - pub_year + 1;
    if (t < 1) continue;
    d.t.push_back(static_cast<double>(t));
    d.c.push_back(c);
    d.total += c;
    norm2 += c * c;
  }
  CitationFit fit;
  if (d.total <= 0.0) return fit;  // amplitude fallback 0
  fit.amplitude = d.total;
  if (d.t.size() < 3) return fit;

  std::vector<std::array<double, 3>> starts;
  for (double mu : {0.0, 1.0, 2.0}) {
    for (double sg : {0.3, 1.0}) starts.push_back({mu, sg, 1.2 * d.total});
  }
  Rng rng(opt.seed);
  for (int i = 0; i < opt.random_starts; ++i) {
    starts.push_back({kMuMin + (kMuMax - kMuMin) * uniform01(rng), kSigmaMin + (kSigmaMax - kSigmaMin) * uniform01(rng),
                      d.total * (1.0 + 19.0 * uniform01(rng))});
  }

  const gsl_multimin_fminimizer_type* type = gsl_multimin_fminimizer_nmsimplex2;
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(type, 3);
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  gsl_multimin_function fn{&detail::fit_objective, 3, &d};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& st : starts) {
    for (std::size_t k = 0; k < 3; ++k) gsl_vector_set(x, k, st[k]);
    gsl_vector_set(step, 0, 0.5);
    gsl_vector_set(step, 1, 0.2);
    gsl_vector_set(step, 2, 0.3 * d.total);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < 600; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != 0) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-6) == GSL_SUCCESS) break;
    }
    if (s->fval < best) {
      best = s->fval;
      fit.mu = gsl_vector_get(s->x, 0);
      fit.sigma = gsl_vector_get(s->x, 1);
      fit.amplitude = gsl_vector_get(s->x, 2);
    }
  }
  gsl_vector_free(step);
  gsl_vector_free(x);
  gsl_multimin_fminimizer_free(s);

  fit.residual = std::sqrt(detail::fit_sse(d, fit.mu, fit.sigma, fit.amplitude));
  fit.success = fit.sigma > 0.0 && fit.residual <= 0.5 * std::sqrt(norm2);
  if (!fit.success) {
    fit.mu = 0.0;
    fit.sigma = 1.0;
    fit.amplitude = d.total;
  }
  return fit;
}

inline CitationFit fit_citation_lognormal(const std::map<int, int>& history, int pub_year,
                                          const CitationFitOptions& opt = {}) {
  std::map<int, double> h;
  for (const auto& [y, c] : history) h[y] = c;
  return fit_citation_lognormal(h, pub_year, opt);
}

/// Citations received in the publication year and the two following years.
inline double citations_first_years(const PublicationMeta& p, int years = 3) {
  if (p.citation_history.empty()) return kMissing;
  double s = 0.0;
  for (const auto& [y, c] : p.citation_history) {
    if (y >= p.year && y < p.year + years) s += c;
  }
  return s;
}

}  // namespace claimcal
