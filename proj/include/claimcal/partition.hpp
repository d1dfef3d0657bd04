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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "claimcal/beta.hpp"
#include "claimcal/common.hpp"
#include "claimcal/corpus.hpp"

namespace claimcal {

enum class ClassLabel { Negative, Neutral, Positive };

inline const char* to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::Negative:
      return "negative";
    case ClassLabel::Neutral:
      return "neutral";
    case ClassLabel::Positive:
      return "positive";
  }
  return "?";
}

inline ClassLabel parse_class_label(std::string_view s) {
  if (s == "negative") return ClassLabel::Negative;
  if (s == "neutral") return ClassLabel::Neutral;
  if (s == "positive") return ClassLabel::Positive;
  throw Error("unknown class label '" + std::string(s) + "'");
}

/// pi_0 indicator.
constexpr bool is_neutral(ClassLabel c) noexcept { return c == ClassLabel::Neutral; }
/// pi_+ indicator; only meaningful off the neutral class.
constexpr int positive_indicator(ClassLabel c) noexcept { return c == ClassLabel::Positive ? 1 : 0; }

struct Thresholds {
  double theta_minus = 0.0;
  double theta_plus = 0.0;

  double upper_cut() const noexcept { return 1.0 - theta_plus; }
  bool valid() const noexcept {
    return theta_minus > 0.0 && theta_minus < 1.0 && theta_plus > 0.0 && theta_plus < 1.0 - theta_minus;
  }
  void validate() const {
    if (!valid()) {
      throw Error("invalid thresholds (" + text::fmt(theta_minus) + ", " + text::fmt(theta_plus) +
                  "): need 0 < theta- < 1 and 0 < theta+ < 1 - theta-");
    }
  }
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

inline ClassLabel classify(double strength, const Thresholds& th) noexcept {
  if (strength < th.theta_minus) return ClassLabel::Negative;
  if (strength >= th.upper_cut()) return ClassLabel::Positive;
  return ClassLabel::Neutral;
}

using LabelMap = std::map<InteractionKey, ClassLabel>;

inline LabelMap partition_classes(const StrengthMap& strengths, const Thresholds& th) {
  th.validate();
  LabelMap out;
  for (const auto& [k, s] : strengths) out.emplace(k, classify(s, th));
  return out;
}

struct ClassPosteriors {
  BetaPosterior negative;
  BetaPosterior neutral;
  BetaPosterior positive;
  bool negative_empty = false;
  bool neutral_empty = false;
  bool positive_empty = false;
  bool neutral_uses_polarity = true;  // correctness is undefined off the signed classes
};

/// Class posteriors g-, g0, g+. Signed classes update on claim correctness, the
/// neutral class on raw polarity. Interactions without a label are ignored.
inline ClassPosteriors class_posteriors(const ClaimCorpus& corpus, const LabelMap& labels,
                                        BetaPosterior prior = {1.0, 1.0}) {
  check_posterior(prior);
  std::array<double, 3> succ{}, fail{};
  std::array<std::size_t, 3> n{};
  for (const auto& [key, label] : labels) {
    auto it = corpus.interactions.find(key);
    if (it == corpus.interactions.end()) continue;
    const auto c = static_cast<std::size_t>(label);
    for (const auto& claim : it->second.claims) {
      const int outcome = label == ClassLabel::Neutral ? claim.polarity
                                                        : claim_correctness(claim.polarity, positive_indicator(label));
      (outcome ? succ[c] : fail[c]) += 1.0;
      ++n[c];
    }
  }
  ClassPosteriors out;
  out.negative = beta_update_counts(prior, succ[0], fail[0]);
  out.neutral = beta_update_counts(prior, succ[1], fail[1]);
  out.positive = beta_update_counts(prior, succ[2], fail[2]);
  out.negative_empty = n[0] == 0;
  out.neutral_empty = n[1] == 0;
  out.positive_empty = n[2] == 0;
  return out;
}

enum class MovingThreshold { Minus, Plus };
enum class Side { Left, Right };

struct DistanceCurve {
  MovingThreshold moving = MovingThreshold::Minus;
  double fixed_other = 0.0;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<std::size_t> counts;  // claims in the moving class
};

/// Interactions with a strength and at least one claim, sorted by strength, with
/// prefix sums of positive and negative claims. Every threshold query is two
/// binary searches.
class ThresholdProblem {
 public:
  ThresholdProblem(const ClaimCorpus& corpus, const StrengthMap& strengths, BetaPosterior prior = {1.0, 1.0})
      : prior_(prior) {
    check_posterior(prior);
    struct Row {
      double s;
      double pos;
      double neg;
    };
    std::vector<Row> rows;
    for (const auto& [key, s] : strengths) {
      auto it = corpus.interactions.find(key);
      if (it == corpus.interactions.end() || it->second.claims.empty()) continue;
      double pos = 0;
      for (const auto& c : it->second.claims) pos += c.polarity;
      rows.push_back({s, pos, static_cast<double>(it->second.claims.size()) - pos});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.s < b.s; });
    strengths_.reserve(rows.size());
    pos_prefix_.assign(1, 0.0);
    neg_prefix_.assign(1, 0.0);
    for (const auto& r : rows) {
      strengths_.push_back(r.s);
      pos_prefix_.push_back(pos_prefix_.back() + r.pos);
      neg_prefix_.push_back(neg_prefix_.back() + r.neg);
    }
  }

  std::size_t interactions() const noexcept { return strengths_.size(); }
  double total_claims() const noexcept { return pos_prefix_.back() + neg_prefix_.back(); }
  const std::vector<double>& sorted_strengths() const noexcept { return strengths_; }
  const BetaPosterior& prior() const noexcept { return prior_; }

  std::size_t distinct_strengths() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < strengths_.size(); ++i) n += (i == 0 || strengths_[i] != strengths_[i - 1]);
    return n;
  }

  struct Split {
    ClassPosteriors post;
    double neg_claims = 0, neutral_claims = 0, pos_claims = 0;
  };

  /// Posteriors and class claim counts for a threshold pair. Threshold validity is
  /// the caller's concern so that scans can probe the boundary.
  Split split(double theta_minus, double theta_plus) const {
    const auto lo = index_below(theta_minus);
    const auto hi = std::max(lo, index_below(1.0 - theta_plus));
    const auto n = strengths_.size();
    Split s;
    const double np = pos_prefix_[lo], nn = neg_prefix_[lo];
    const double zp = pos_prefix_[hi] - pos_prefix_[lo], zn = neg_prefix_[hi] - neg_prefix_[lo];
    const double pp = pos_prefix_[n] - pos_prefix_[hi], pn = neg_prefix_[n] - neg_prefix_[hi];
    s.post.negative = beta_update_counts(prior_, nn, np);  // correct = claimed negative
    s.post.neutral = beta_update_counts(prior_, zp, zn);
    s.post.positive = beta_update_counts(prior_, pp, pn);
    s.neg_claims = np + nn;
    s.neutral_claims = zp + zn;
    s.pos_claims = pp + pn;
    s.post.negative_empty = s.neg_claims == 0;
    s.post.neutral_empty = s.neutral_claims == 0;
    s.post.positive_empty = s.pos_claims == 0;
    return s;
  }

  /// Memoized W between two posteriors. Not thread-safe; fill via prefetch().
  double distance(const BetaPosterior& p, const BetaPosterior& q) const {
    const Key key{p.a, p.b, q.a, q.b};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double w = wasserstein_beta(p, q);
    cache_.emplace(key, w);
    return w;
  }

  /// Computes missing W values for the given pairs in parallel, then caches them.
  void prefetch(const std::vector<std::pair<BetaPosterior, BetaPosterior>>& pairs) const {
    std::vector<Key> todo;
    std::set<Key> seen;
    for (const auto& [p, q] : pairs) {
      const Key k{p.a, p.b, q.a, q.b};
      if (!cache_.contains(k) && seen.insert(k).second) todo.push_back(k);
    }
    std::vector<double> w(todo.size());
    parallel_for(todo.size(), [&](std::size_t i) {
      w[i] = wasserstein_beta({todo[i][0], todo[i][1]}, {todo[i][2], todo[i][3]});
    });
    for (std::size_t i = 0; i < todo.size(); ++i) cache_.emplace(todo[i], w[i]);
  }

 private:
  using Key = std::array<double, 4>;

  std::size_t index_below(double cut) const {
    return static_cast<std::size_t>(std::lower_bound(strengths_.begin(), strengths_.end(), cut) - strengths_.begin());
  }

  BetaPosterior prior_;
  std::vector<double> strengths_;
  std::vector<double> pos_prefix_, neg_prefix_;
  mutable std::map<Key, double> cache_;
};

/// Grid of threshold values j*step, j >= 1, strictly inside (0, 1 - other).
inline std::vector<double> threshold_grid(double step, double other) {
  if (!(step > 0.0) || step >= 1.0) throw Error("grid step must lie in (0,1)");
  if (!(other > 0.0) || other >= 1.0) throw Error("fixed threshold must lie in (0,1)");
  std::vector<double> grid;
  for (long j = 1;; ++j) {
    const double t = static_cast<double>(j) * step;
    if (t >= 1.0 - other || t >= 1.0) break;
    grid.push_back(t);
  }
  return grid;
}

/// W(g-, g0) as theta- moves with theta+ fixed, or W(g+, g0) as theta+ moves.
inline DistanceCurve scan_thresholds(const ThresholdProblem& problem, MovingThreshold moving, double grid_step,
                                     double fixed_other) {
  if (problem.distinct_strengths() < 2) throw Error("need at least 2 distinct strength values to scan thresholds");
  DistanceCurve curve;
  curve.moving = moving;
  curve.fixed_other = fixed_other;
  curve.grid = threshold_grid(grid_step, fixed_other);
  std::vector<ThresholdProblem::Split> splits;
  splits.reserve(curve.grid.size());
  std::vector<std::pair<BetaPosterior, BetaPosterior>> pairs;
  for (double t : curve.grid) {
    auto s = moving == MovingThreshold::Minus ? problem.split(t, fixed_other) : problem.split(fixed_other, t);
    pairs.emplace_back(moving == MovingThreshold::Minus ? s.post.negative : s.post.positive, s.post.neutral);
    splits.push_back(std::move(s));
  }
  problem.prefetch(pairs);
  for (std::size_t j = 0; j < splits.size(); ++j) {
    curve.values.push_back(problem.distance(pairs[j].first, pairs[j].second));
    const double c = moving == MovingThreshold::Minus ? splits[j].neg_claims : splits[j].pos_claims;
    curve.counts.push_back(static_cast<std::size_t>(c));
  }
  return curve;
}

inline DistanceCurve scan_thresholds(const ClaimCorpus& corpus, const StrengthMap& strengths, MovingThreshold moving,
                                     double grid_step, double fixed_other, BetaPosterior prior = {1.0, 1.0}) {
  return scan_thresholds(ThresholdProblem(corpus, strengths, prior), moving, grid_step, fixed_other);
}

struct Discontinuity {
  std::size_t index = 0;
  double theta = 0.0;
  double delta = 0.0;
};

struct DiscontinuityList {
  std::vector<Discontinuity> points;
  std::size_t zero_denominators = 0;  // jumps skipped because the neighbour value was 0
};

/// One-sided relative jumps of the curve at grid points where it is discontinuous.
/// Left: (f[j-1] - f[j]) / f[j-1]. Right: (f[j+1] - f[j]) / f[j+1].
inline DiscontinuityList relative_discontinuity(const DistanceCurve& curve, Side side) {
  DiscontinuityList out;
  const auto& f = curve.values;
  for (std::size_t j = 0; j < f.size(); ++j) {
    std::size_t nb;
    if (side == Side::Left) {
      if (j == 0) continue;
      nb = j - 1;
    } else {
      if (j + 1 >= f.size()) continue;
      nb = j + 1;
    }
    if (f[nb] == f[j]) continue;
    if (f[nb] == 0.0) {
      ++out.zero_denominators;
      continue;
    }
    out.points.push_back({j, curve.grid[j], (f[nb] - f[j]) / f[nb]});
  }
  return out;
}

struct OptimizeOptions {
  double grid_step = 0.001;
  BetaPosterior prior{1.0, 1.0};
  // Each of C-, C0, C+ must hold at least this share of all claims.
  double min_class_share = 0.05;
  double start_epsilon = 0.15;
  int max_iterations = 25;
};

struct OptimizeDiagnostics {
  DistanceCurve negative_curve;
  DistanceCurve positive_curve;
  double delta_minus = 0.0;  // left jump of W(g-, g0) at theta-
  double delta_plus = 0.0;   // right jump of W(g+, g0) at theta+
  double product = 0.0;
  int iterations = 0;
  bool converged = false;
  double neg_claims = 0, neutral_claims = 0, pos_claims = 0;
  bool neutral_uses_polarity = true;
  // Set when either class distance at the returned pair is within the summed
  // posterior sds, i.e. the classes are not separated in the data.
  bool weak_structure = false;
};

struct OptimizeResult {
  Thresholds thresholds;
  OptimizeDiagnostics diagnostics;
};

inline Thresholds percentile_thresholds(std::vector<double> strengths, double eps) {
  if (strengths.empty()) throw Error("percentile thresholds need at least one strength");
  if (!(eps > 0.0 && eps < 0.5)) throw Error("epsilon must lie in (0, 0.5)");
  const double lo = stats::quantile(strengths, eps);
  const double hi = stats::quantile(std::move(strengths), 1.0 - eps);
  Thresholds th{lo, 1.0 - hi};
  th.validate();
  return th;
}

inline Thresholds percentile_thresholds(const StrengthMap& strengths, double eps) {
  std::vector<double> v;
  v.reserve(strengths.size());
  for (const auto& [k, s] : strengths) v.push_back(s);
  return percentile_thresholds(std::move(v), eps);
}

namespace detail {

struct SideChoice {
  bool found = false;
  double theta = 0.0;
  double delta = 0.0;
};

/// Best admissible jump on one curve: largest delta, ties to the larger theta
/// (more claims in the moving class).
inline SideChoice best_jump(const ThresholdProblem& problem, const DistanceCurve& curve, Side side,
                            const OptimizeOptions& opt) {
  SideChoice best;
  const double floor = opt.min_class_share * problem.total_claims();
  for (const auto& d : relative_discontinuity(curve, side).points) {
    if (!(d.delta > 0.0)) continue;
    const auto s = curve.moving == MovingThreshold::Minus ? problem.split(d.theta, curve.fixed_other)
                                                          : problem.split(curve.fixed_other, d.theta);
    if (s.neg_claims < floor || s.neutral_claims < floor || s.pos_claims < floor) continue;
    if (!best.found || d.delta > best.delta || (d.delta == best.delta && d.theta > best.theta)) {
      best = {true, d.theta, d.delta};
    }
  }
  return best;
}

}  // namespace detail

/// Maximizes delta^L W(g-,g0) * delta^R W(g+,g0) over grid thresholds. The product
/// separates, so each factor is maximized with the other threshold held fixed,
/// alternating until neither moves.
inline OptimizeResult optimize_thresholds(const ThresholdProblem& problem, const OptimizeOptions& opt = {}) {
  if (problem.distinct_strengths() < 3) throw Error("need at least 3 distinct strength values");
  Thresholds th;
  try {
    th = percentile_thresholds(problem.sorted_strengths(), opt.start_epsilon);
  } catch (const Error&) {
    th = {1.0 / 3.0, 1.0 / 3.0};
  }
  OptimizeResult res;
  auto& dg = res.diagnostics;
  std::set<std::pair<double, double>> visited;
  for (int it = 0; it < opt.max_iterations; ++it) {
    dg.iterations = it + 1;
    const Thresholds prev = th;
    dg.negative_curve = scan_thresholds(problem, MovingThreshold::Minus, opt.grid_step, th.theta_plus);
    const auto lo = detail::best_jump(problem, dg.negative_curve, Side::Left, opt);
    if (!lo.found) throw Error("degenerate strength distribution: no admissible jump for theta-");
    th.theta_minus = lo.theta;
    dg.delta_minus = lo.delta;

    dg.positive_curve = scan_thresholds(problem, MovingThreshold::Plus, opt.grid_step, th.theta_minus);
    const auto hi = detail::best_jump(problem, dg.positive_curve, Side::Right, opt);
    if (!hi.found) throw Error("degenerate strength distribution: no admissible jump for theta+");
    th.theta_plus = hi.theta;
    dg.delta_plus = hi.delta;

    if (th == prev) {
      dg.converged = true;
      break;
    }
    if (!visited.insert({th.theta_minus, th.theta_plus}).second) break;  // cycling
  }
  // Refresh the negative curve so both curves reflect the returned pair.
  dg.negative_curve = scan_thresholds(problem, MovingThreshold::Minus, opt.grid_step, th.theta_plus);
  const auto lo = detail::best_jump(problem, dg.negative_curve, Side::Left, opt);
  if (lo.found && lo.theta == th.theta_minus) dg.delta_minus = lo.delta;
  dg.product = dg.delta_minus * dg.delta_plus;
  th.validate();
  const auto s = problem.split(th.theta_minus, th.theta_plus);
  dg.neg_claims = s.neg_claims;
  dg.neutral_claims = s.neutral_claims;
  dg.pos_claims = s.pos_claims;
  const auto& P = s.post;
  dg.weak_structure = problem.distance(P.negative, P.neutral) < P.negative.sd() + P.neutral.sd() ||
                      problem.distance(P.positive, P.neutral) < P.positive.sd() + P.neutral.sd();
  res.thresholds = th;
  return res;
}

inline OptimizeResult optimize_thresholds(const ClaimCorpus& corpus, const StrengthMap& strengths,
                                          const OptimizeOptions& opt = {}) {
  return optimize_thresholds(ThresholdProblem(corpus, strengths, opt.prior), opt);
}

struct DistanceSurface {
  std::vector<double> grid;                  // shared axis for theta- and theta+
  std::vector<std::vector<double>> w_minus;  // [i][j]: theta- = grid[i], theta+ = grid[j]; NaN if invalid
  std::vector<std::vector<double>> w_plus;
};

/// Full two-threshold view of W(g-,g0) and W(g+,g0), for inspecting how weakly
/// each distance depends on the other threshold.
inline DistanceSurface threshold_surface(const ThresholdProblem& problem, double step) {
  DistanceSurface out;
  for (long j = 1; static_cast<double>(j) * step < 1.0; ++j) out.grid.push_back(static_cast<double>(j) * step);
  const auto n = out.grid.size();
  out.w_minus.assign(n, std::vector<double>(n, kMissing));
  out.w_plus.assign(n, std::vector<double>(n, kMissing));
  std::vector<std::pair<BetaPosterior, BetaPosterior>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!Thresholds{out.grid[i], out.grid[j]}.valid()) continue;
      const auto s = problem.split(out.grid[i], out.grid[j]);
      pairs.emplace_back(s.post.negative, s.post.neutral);
      pairs.emplace_back(s.post.positive, s.post.neutral);
    }
  }
  problem.prefetch(pairs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!Thresholds{out.grid[i], out.grid[j]}.valid()) continue;
      const auto s = problem.split(out.grid[i], out.grid[j]);
      out.w_minus[i][j] = problem.distance(s.post.negative, s.post.neutral);
      out.w_plus[i][j] = problem.distance(s.post.positive, s.post.neutral);
    }
  }
  return out;
}

}  // namespace claimcal
