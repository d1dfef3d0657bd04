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

// Grouped cross-validation, Zipf fitting, task evaluation and the two policy
// experiments (community split, claim-count resampling).

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "claimcal/common.hpp"
#include "claimcal/corpus.hpp"
#include "claimcal/features.hpp"
#include "claimcal/learn.hpp"
#include "claimcal/partition.hpp"
#include "json.hpp"

namespace claimcal {

// Fold plans --------------------------------------------------------------------------

struct FoldPlan {
  int repeats = 20;
  int k = 3;
  std::uint64_t seed = 0;
  std::vector<InteractionKey> interactions;  // sorted
  std::vector<std::vector<int>> fold;        // [repeat][interaction index]

  int fold_of(int repeat, const InteractionKey& key) const {
    auto it = std::lower_bound(interactions.begin(), interactions.end(), key);
    if (it == interactions.end() || !(*it == key)) throw Error("interaction " + key.str() + " not in fold plan");
    return fold.at(static_cast<std::size_t>(repeat))[static_cast<std::size_t>(it - interactions.begin())];
  }
};

namespace detail {

inline FoldPlan empty_plan(std::vector<InteractionKey> interactions, int repeats, int k, std::uint64_t seed) {
  if (k < 2) throw Error("need at least 2 folds");
  if (repeats < 1) throw Error("need at least one repeat");
  std::sort(interactions.begin(), interactions.end());
  interactions.erase(std::unique(interactions.begin(), interactions.end()), interactions.end());
  if (interactions.size() < static_cast<std::size_t>(k)) throw Error("fewer interactions than folds");
  FoldPlan plan;
  plan.repeats = repeats;
  plan.k = k;
  plan.seed = seed;
  plan.interactions = std::move(interactions);
  plan.fold.assign(static_cast<std::size_t>(repeats), std::vector<int>(plan.interactions.size(), 0));
  return plan;
}

}  // namespace detail

/// Per repeat: shuffle the interactions, fold = position mod k.
inline FoldPlan grouped_kfold(std::vector<InteractionKey> interactions, int repeats, int k, std::uint64_t seed) {
  auto plan = detail::empty_plan(std::move(interactions), repeats, k, seed);
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<std::size_t> idx(plan.interactions.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    for (std::size_t p = 0; p < idx.size(); ++p) plan.fold[static_cast<std::size_t>(r)][idx[p]] = static_cast<int>(p % k);
  }
  return plan;
}

/// Popularity deciles of the interactions, ordered by claim count then key.
inline std::map<InteractionKey, int> popularity_strata(const ClaimCorpus& corpus,
                                                       const std::vector<InteractionKey>& keys, int strata = 10) {
  std::vector<std::pair<std::size_t, InteractionKey>> order;
  for (const auto& k : keys) order.emplace_back(corpus.at(k).claims.size(), k);
  std::sort(order.begin(), order.end());
  std::map<InteractionKey, int> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out[order[i].second] = static_cast<int>(i * static_cast<std::size_t>(strata) / order.size());
  }
  return out;
}

/// Grouped folds assigned within popularity deciles, so every fold sees the same
/// claim-count distribution. Used for the claim-level tasks.
inline FoldPlan popularity_kfold(const ClaimCorpus& corpus, std::vector<InteractionKey> interactions, int repeats,
                                 int k, std::uint64_t seed) {
  auto plan = detail::empty_plan(std::move(interactions), repeats, k, seed);
  const auto strata = popularity_strata(corpus, plan.interactions);
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < plan.interactions.size(); ++i) members[strata.at(plan.interactions[i])].push_back(i);
    std::size_t offset = 0;
    for (auto& [s, idx] : members) {
      shuffle(idx, rng);
      for (std::size_t p = 0; p < idx.size(); ++p) {
        plan.fold[static_cast<std::size_t>(r)][idx[p]] = static_cast<int>((p + offset) % k);
      }
      offset += idx.size();
    }
  }
  return plan;
}

// Zipf law ----------------------------------------------------------------------------

namespace detail {

// Second-order forward-mode dual number in one variable.
struct Dual2 {
  double v = 0.0, d1 = 0.0, d2 = 0.0;
};
inline Dual2 operator+(Dual2 a, Dual2 b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Dual2 operator*(Dual2 a, Dual2 b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Dual2 operator*(double c, Dual2 a) { return {c * a.v, c * a.d1, c * a.d2}; }
inline Dual2 inv(Dual2 a) {
  const double f = 1.0 / a.v;
  return {f, -a.d1 * f * f, (2.0 * a.d1 * a.d1 / a.v - a.d2) * f * f};
}
inline Dual2 dexp(Dual2 a) {
  const double e = std::exp(a.v);
  return {e, e * a.d1, e * (a.d2 + a.d1 * a.d1)};
}

}  // namespace detail

struct ZetaDerivs {
  double zeta, d1, d2;
};

/// Riemann zeta and its first two derivatives for s > 1 by Euler-Maclaurin
/// summation, differentiated exactly with dual numbers.
inline ZetaDerivs zeta_derivatives(double s) {
  if (!(s > 1.0)) throw Error("zeta requires s > 1");
  using detail::Dual2;
  const Dual2 S{s, 1.0, 0.0};
  constexpr int N = 20;
  Dual2 sum{};
  auto power = [&](double k, Dual2 e) { return detail::dexp(std::log(k) * e); };  // k^e
  const Dual2 minus_s = -1.0 * S;
  for (int k = 1; k < N; ++k) sum = sum + power(k, minus_s);
  const double n = N;
  // N^{1-s} / (s-1) + N^{-s} / 2
  sum = sum + power(n, Dual2{1.0, 0.0, 0.0} + minus_s) * detail::inv(S + Dual2{-1.0, 0.0, 0.0});
  sum = sum + 0.5 * power(n, minus_s);
  // Bernoulli corrections B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
  static const double B[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0};
  Dual2 rising = S;
  double fact = 2.0;
  for (int j = 1; j <= 6; ++j) {
    if (j > 1) {
      rising = rising * (S + Dual2{2.0 * j - 3.0, 0.0, 0.0}) * (S + Dual2{2.0 * j - 2.0, 0.0, 0.0});
      fact *= (2.0 * j - 1.0) * (2.0 * j);
    }
    sum = sum + (B[j - 1] / fact) * (rising * power(n, minus_s + Dual2{1.0 - 2.0 * j, 0.0, 0.0}));
  }
  return {sum.v, sum.d1, sum.d2};
}

/// Maximum-likelihood exponent of a discrete power law with x_min = 1:
/// solves zeta'(s)/zeta(s) = -mean(log x) by safeguarded Newton iteration.
inline double fit_zipf(const std::vector<double>& x) {
  if (x.empty()) throw Error("zipf fit needs data");
  std::set<double> distinct;
  double L = 0.0;
  for (double v : x) {
    if (!(v >= 1.0) || v != std::floor(v)) throw Error("zipf fit needs positive integer counts");
    distinct.insert(v);
    L += std::log(v);
  }
  if (distinct.size() < 5) throw Error("zipf fit needs at least 5 distinct values (no power-law structure)");
  L /= static_cast<double>(x.size());
  auto h = [&](double s) {
    const auto z = zeta_derivatives(s);
    return std::pair{z.d1 / z.zeta + L, (z.d2 * z.zeta - z.d1 * z.d1) / (z.zeta * z.zeta)};
  };
  // h is increasing in s; bracket the root.
  double lo = 1.0 + 1e-6, hi = 2.0;
  while (h(hi).first < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw Error("zipf exponent diverges");
  }
  if (h(lo).first > 0.0) throw Error("zipf exponent at the lower boundary");
  double s = 1.0 + static_cast<double>(x.size()) / (L * static_cast<double>(x.size()) + 1e-12);
  s = std::clamp(s, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const auto [f, df] = h(s);
    if (f < 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    double next = s - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) < 1e-12 * s) return next;
    s = next;
  }
  return s;
}

inline double fit_zipf(const std::vector<int>& x) {
  std::vector<double> d(x.begin(), x.end());
  return fit_zipf(d);
}

inline std::vector<double> claim_counts(const ClaimCorpus& corpus) {
  std::vector<double> out;
  for (const auto& [k, rec] : corpus.interactions) out.push_back(static_cast<double>(rec.claims.size()));
  return out;
}

struct ClaimSplit {
  std::set<InteractionKey> train_interactions, test_interactions;
  std::vector<ClaimRecord> train_claims, test_claims;
};

/// Interactions sorted by claim count and cut into deciles; within each decile an
/// interaction goes to train with probability train_fraction and takes all its claims.
inline ClaimSplit zipf_claim_split(const ClaimCorpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0,1)");
  std::vector<InteractionKey> keys;
  for (const auto& [k, rec] : corpus.interactions) keys.push_back(k);
  const auto strata = popularity_strata(corpus, keys);
  ClaimSplit out;
  for (int s = 0; s < 10; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    for (const auto& k : keys) {
      if (strata.at(k) != s) continue;
      const bool train = uniform01(rng) < train_fraction;
      (train ? out.train_interactions : out.test_interactions).insert(k);
      auto& dst = train ? out.train_claims : out.test_claims;
      const auto& cl = corpus.at(k).claims;
      dst.insert(dst.end(), cl.begin(), cl.end());
    }
  }
  return out;
}

// Statistics ----------------------------------------------------------------------------

struct MeanCI {
  double mean = kMissing, low = kMissing, high = kMissing;
};

/// Mean with a Student-t 95% interval.
inline MeanCI mean_ci95(const std::vector<double>& v) {
  MeanCI r;
  if (v.empty()) return r;
  r.mean = stats::mean(v);
  if (v.size() < 2) return r;
  const boost::math::students_t t(static_cast<double>(v.size() - 1));
  const double half = boost::math::quantile(t, 0.975) * stats::sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
  r.low = r.mean - half;
  r.high = r.mean + half;
  return r;
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

/// 1 bit (the fair-coin baseline) minus the mean binary entropy of the predictions.
inline double info_gain(const std::vector<double>& p) {
  if (p.empty()) throw Error("information gain needs predictions");
  double s = 0.0;
  for (double x : p) {
    if (x < 0.0 || x > 1.0) throw Error("predictions must lie in [0,1]");
    s += binary_entropy(x);
  }
  return 1.0 - s / static_cast<double>(p.size());
}

struct RankTest {
  double rho = kMissing;
  double p_one_sided = kMissing;  // H1: rho > 0
};

inline RankTest spearman_test(const std::vector<double>& x, const std::vector<double>& y) {
  RankTest r;
  if (x.size() != y.size() || x.size() < 3) return r;
  r.rho = stats::spearman(x, y);
  const double n = static_cast<double>(x.size());
  if (std::abs(r.rho) >= 1.0) {
    r.p_one_sided = r.rho > 0 ? 0.0 : 1.0;
    return r;
  }
  const double t = r.rho * std::sqrt((n - 2.0) / (1.0 - r.rho * r.rho));
  r.p_one_sided = boost::math::cdf(boost::math::complement(boost::math::students_t(n - 2.0), t));
  return r;
}

// Evaluation ------------------------------------------------------------------------------

enum class Task { Neutral, PositiveDirect, PositiveBayes, ClaimCorrectness };
enum class ModelKind { Forest, Logit };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::Neutral:
      return "neutral";
    case Task::PositiveDirect:
      return "positive_direct";
    case Task::PositiveBayes:
      return "positive_bayes";
    case Task::ClaimCorrectness:
      return "claim_correctness";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  for (auto t : {Task::Neutral, Task::PositiveDirect, Task::PositiveBayes, Task::ClaimCorrectness}) {
    if (s == to_string(t)) return t;
  }
  throw Error("unknown task '" + std::string(s) + "'");
}

inline const char* to_string(ModelKind m) { return m == ModelKind::Forest ? "forest" : "logit"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "forest") return ModelKind::Forest;
  if (s == "logit") return ModelKind::Logit;
  throw Error("unknown model kind '" + std::string(s) + "'");
}

inline bool is_claim_task(Task t) { return t == Task::ClaimCorrectness; }

/// Everything a task needs: labels plus interaction rows and, for the claim-based
/// tasks, claim rows (on the same interactions).
struct EvalInputs {
  const ClaimCorpus* corpus = nullptr;
  LabelMap labels;
  FeatureTable interactions;
  FeatureTable claims;
};

struct EvalOptions {
  ModelKind model = ModelKind::Forest;
  ForestOptions forest;
  LogitOptions logit;
  std::uint64_t seed = 11;
  std::optional<double> bayes_prior;  // default: positive share among training non-neutral interactions
  // Replaces q by the claim's true correctness; isolates the aggregation step.
  bool oracle_claim_correctness = false;
};

struct FoldResult {
  int repeat = 0, fold = 0;
  std::vector<InteractionKey> keys;  // scored units (interactions, or the claim's interaction)
  std::vector<double> scores;
  std::vector<int> labels;
  double auc = kMissing;
  double conditional_auc = kMissing;  // positive tasks: AUC among non-neutral interactions
  double ig = kMissing;
  std::map<std::string, double> importances;
  nlohmann::json model;  // dump of the main model of this fold
  std::string flag;
};

struct EvalReport {
  Task task = Task::Neutral;
  ModelKind model = ModelKind::Forest;
  std::vector<FoldResult> folds;
  std::vector<double> auc_samples, conditional_auc_samples, ig_samples;
  MeanCI auc, conditional_auc, ig;
  std::map<std::string, FamilyStat> families;
  std::vector<std::string> flags;

  nlohmann::json to_json() const {
    nlohmann::json fam = nlohmann::json::object();
    for (const auto& [f, s] : families) fam[f] = {{"mean", s.mean}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
    auto ci = [](const MeanCI& c) { return nlohmann::json{{"mean", c.mean}, {"ci_low", c.low}, {"ci_high", c.high}}; };
    return nlohmann::json{{"task", to_string(task)},
                          {"model_kind", to_string(model)},
                          {"samples", auc_samples.size()},
                          {"auc", ci(auc)},
                          {"auc_samples", auc_samples},
                          {"conditional_auc", ci(conditional_auc)},
                          {"information_gain", ci(ig)},
                          {"ig_samples", ig_samples},
                          {"families", fam},
                          {"flags", flags}};
  }
};

namespace detail {

struct TrainedModel {
  ModelKind kind = ModelKind::Forest;
  Imputer imputer;
  ForestModel forest;
  LogitModel logit;

  std::vector<double> predict(const FeatureMatrix& raw) const {
    const auto X = imputer.apply(raw);
    return kind == ModelKind::Forest ? predict_forest(forest, X) : predict_logit(logit, X);
  }
  std::map<std::string, double> importances() const {
    return kind == ModelKind::Forest ? gini_importances(forest) : logit.weight_map();
  }
  nlohmann::json dump() const { return kind == ModelKind::Forest ? forest_to_json(forest) : logit_to_json(logit); }
};

inline TrainedModel train_model(const FeatureMatrix& raw, const std::vector<int>& y, const EvalOptions& opt,
                                std::uint64_t seed) {
  TrainedModel m;
  m.kind = opt.model;
  m.imputer = Imputer::fit(raw);
  const auto X = m.imputer.apply(raw);
  if (opt.model == ModelKind::Forest) {
    m.forest = train_forest(X, y, seed, opt.forest);
  } else {
    m.logit = train_logit_l1(X, y, opt.logit);
  }
  return m;
}

inline bool both_classes(const std::vector<int>& y) {
  bool a = false, b = false;
  for (int v : y) (v ? a : b) = true;
  return a && b;
}

inline std::vector<std::size_t> rows_where(const FeatureTable& t, auto pred) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (pred(i)) idx.push_back(i);
  }
  return idx;
}

}  // namespace detail

/// Cross-validated evaluation of one task over every (repeat, fold) of the plan.
/// Each fold trains on the other folds' interactions (and their claims) only.
inline EvalReport evaluate(const EvalInputs& in, Task task, const FoldPlan& plan, const EvalOptions& opt = {}) {
  if (!in.corpus) throw Error("evaluation needs the corpus");
  const bool needs_claims = task == Task::ClaimCorrectness || task == Task::PositiveBayes;
  if (needs_claims && in.claims.size() == 0) throw Error(std::string("task ") + to_string(task) + " needs claim rows");
  auto label_of = [&](const InteractionKey& k) {
    auto it = in.labels.find(k);
    if (it == in.labels.end()) throw Error("no class label for " + k.str());
    return it->second;
  };
  std::map<std::pair<InteractionKey, PublicationId>, int> polarity;
  if (needs_claims) {
    for (const auto& [k, rec] : in.corpus->interactions) {
      for (const auto& c : rec.claims) polarity[{k, c.publication}] = c.polarity;
    }
  }
  auto correctness = [&](std::size_t i) {
    const auto& k = in.claims.interaction[i];
    return claim_correctness(polarity.at({k, in.claims.publication[i]}), positive_indicator(label_of(k)));
  };

  EvalReport rep;
  rep.task = task;
  rep.model = opt.model;
  const std::size_t n_folds = static_cast<std::size_t>(plan.repeats * plan.k);
  rep.folds.resize(n_folds);

  parallel_for(n_folds, [&](std::size_t s) {
    const int r = static_cast<int>(s) / plan.k, f = static_cast<int>(s) % plan.k;
    FoldResult& fr = rep.folds[s];
    fr.repeat = r;
    fr.fold = f;
    const std::uint64_t seed = derive_seed(opt.seed, s);
    auto in_test = [&](const InteractionKey& k) { return plan.fold_of(r, k) == f; };
    try {
      const auto& IT = in.interactions;
      if (task == Task::ClaimCorrectness) {
        const auto& CT = in.claims;
        auto usable = [&](std::size_t i) { return !is_neutral(label_of(CT.interaction[i])); };
        const auto tr = detail::rows_where(CT, [&](std::size_t i) { return usable(i) && !in_test(CT.interaction[i]); });
        const auto te = detail::rows_where(CT, [&](std::size_t i) { return usable(i) && in_test(CT.interaction[i]); });
        std::vector<int> ytr, yte;
        for (auto i : tr) ytr.push_back(correctness(i));
        for (auto i : te) yte.push_back(correctness(i));
        if (!detail::both_classes(ytr) || !detail::both_classes(yte)) {
          fr.flag = "single class in fold";
          return;
        }
        const auto m = detail::train_model(CT.subset(tr).matrix(), ytr, opt, seed);
        fr.scores = m.predict(CT.subset(te).matrix());
        fr.labels = yte;
        for (auto i : te) fr.keys.push_back(CT.interaction[i]);
        fr.importances = m.importances();
        fr.model = m.dump();
        fr.auc = auc(fr.scores, fr.labels);
        fr.ig = info_gain(fr.scores);
        return;
      }

      const auto tr = detail::rows_where(IT, [&](std::size_t i) { return !in_test(IT.interaction[i]); });
      const auto te = detail::rows_where(IT, [&](std::size_t i) { return in_test(IT.interaction[i]); });
      std::vector<int> neu_tr, neu_te;
      for (auto i : tr) neu_tr.push_back(is_neutral(label_of(IT.interaction[i])) ? 1 : 0);
      for (auto i : te) neu_te.push_back(is_neutral(label_of(IT.interaction[i])) ? 1 : 0);
      if (!detail::both_classes(neu_tr)) {
        fr.flag = "single class in training fold";
        return;
      }
      const auto neutral_model = detail::train_model(IT.subset(tr).matrix(), neu_tr, opt, derive_seed(seed, 1));
      const auto p_neutral = neutral_model.predict(IT.subset(te).matrix());
      for (auto i : te) fr.keys.push_back(IT.interaction[i]);

      if (task == Task::Neutral) {
        if (!detail::both_classes(neu_te)) {
          fr.flag = "single class in test fold";
          return;
        }
        fr.scores = p_neutral;
        fr.labels = neu_te;
        fr.importances = neutral_model.importances();
        fr.model = neutral_model.dump();
        fr.auc = auc(fr.scores, fr.labels);
        fr.ig = info_gain(fr.scores);
        return;
      }

      // Positive tasks: P(+) = P(+ | non-neutral) * P(non-neutral).
      std::vector<double> p_pos(te.size(), 0.0);
      if (task == Task::PositiveDirect) {
        std::vector<std::size_t> tr_nn;
        std::vector<int> y;
        for (auto i : tr) {
          const auto c = label_of(IT.interaction[i]);
          if (is_neutral(c)) continue;
          tr_nn.push_back(i);
          y.push_back(positive_indicator(c));
        }
        if (!detail::both_classes(y)) {
          fr.flag = "single class in training fold";
          return;
        }
        const auto pm = detail::train_model(IT.subset(tr_nn).matrix(), y, opt, derive_seed(seed, 2));
        p_pos = pm.predict(IT.subset(te).matrix());
        fr.importances = pm.importances();
        fr.model = pm.dump();
      } else {
        const auto& CT = in.claims;
        std::vector<std::size_t> ctr;
        std::vector<int> y;
        double pos = 0.0, nn = 0.0;
        for (auto i : tr) {
          const auto c = label_of(IT.interaction[i]);
          if (!is_neutral(c)) {
            nn += 1.0;
            pos += positive_indicator(c);
          }
        }
        for (std::size_t i = 0; i < CT.size(); ++i) {
          if (in_test(CT.interaction[i]) || is_neutral(label_of(CT.interaction[i]))) continue;
          ctr.push_back(i);
          y.push_back(correctness(i));
        }
        const double prior = opt.bayes_prior.value_or(nn > 0 ? std::clamp(pos / nn, 0.01, 0.99) : 0.5);
        std::vector<double> q;
        std::vector<std::size_t> cte;
        for (std::size_t i = 0; i < CT.size(); ++i) {
          if (in_test(CT.interaction[i])) cte.push_back(i);
        }
        if (opt.oracle_claim_correctness) {
          for (auto i : cte) q.push_back(static_cast<double>(correctness(i)));
        } else {
          if (!detail::both_classes(y)) {
            fr.flag = "single class in training claims";
            return;
          }
          const auto cm = detail::train_model(CT.subset(ctr).matrix(), y, opt, derive_seed(seed, 3));
          q = cm.predict(CT.subset(cte).matrix());
          fr.importances = cm.importances();
          fr.model = cm.dump();
        }
        std::map<InteractionKey, std::vector<ClaimEvidence>> ev;
        for (std::size_t k = 0; k < cte.size(); ++k) {
          const auto i = cte[k];
          ev[CT.interaction[i]].push_back({polarity.at({CT.interaction[i], CT.publication[i]}), q[k]});
        }
        for (std::size_t k = 0; k < te.size(); ++k) {
          auto it = ev.find(IT.interaction[te[k]]);
          p_pos[k] = bayes_aggregate(it == ev.end() ? std::vector<ClaimEvidence>{} : it->second, prior);
        }
      }
      std::vector<int> pos_te;
      std::vector<double> cond_s;
      std::vector<int> cond_y;
      for (std::size_t k = 0; k < te.size(); ++k) {
        const auto c = label_of(IT.interaction[te[k]]);
        pos_te.push_back(positive_indicator(c));
        fr.scores.push_back(hierarchical_positive(p_pos[k], 1.0 - p_neutral[k]));
        if (!is_neutral(c)) {
          cond_s.push_back(p_pos[k]);
          cond_y.push_back(positive_indicator(c));
        }
      }
      fr.labels = pos_te;
      if (!detail::both_classes(pos_te)) {
        fr.flag = "single class in test fold";
        return;
      }
      fr.auc = auc(fr.scores, fr.labels);
      if (detail::both_classes(cond_y)) fr.conditional_auc = auc(cond_s, cond_y);
      fr.ig = info_gain(fr.scores);
    } catch (const Error& e) {
      fr.flag = e.what();
    }
  });

  std::vector<std::map<std::string, double>> imps;
  std::set<std::string> names;
  for (const auto& fr : rep.folds) {
    if (!fr.flag.empty()) {
      rep.flags.push_back("repeat " + std::to_string(fr.repeat) + " fold " + std::to_string(fr.fold) + ": " + fr.flag);
      continue;
    }
    rep.auc_samples.push_back(fr.auc);
    rep.ig_samples.push_back(fr.ig);
    if (!is_missing(fr.conditional_auc)) rep.conditional_auc_samples.push_back(fr.conditional_auc);
    if (!fr.importances.empty()) {
      imps.push_back(fr.importances);
      for (const auto& [k, v] : fr.importances) names.insert(k);
    }
  }
  rep.auc = mean_ci95(rep.auc_samples);
  rep.conditional_auc = mean_ci95(rep.conditional_auc_samples);
  rep.ig = mean_ci95(rep.ig_samples);
  rep.families = family_importance(imps, feature_families({names.begin(), names.end()}));
  return rep;
}

// Policies ----------------------------------------------------------------------------------

struct CommunitySplit {
  double auc_low = kMissing, auc_high = kMissing;
  std::size_t n_low = 0, n_high = 0;
  std::string flag;
};

/// AUC among test units with CCN <= threshold and with CCN > threshold.
inline CommunitySplit policy_community_split(const std::vector<double>& scores, const std::vector<int>& labels,
                                             const std::vector<double>& ccn, double threshold) {
  if (scores.size() != labels.size() || scores.size() != ccn.size()) throw Error("policy inputs differ in length");
  CommunitySplit out;
  std::vector<double> sl, sh;
  std::vector<int> yl, yh;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (is_missing(ccn[i])) continue;
    if (ccn[i] <= threshold) {
      sl.push_back(scores[i]);
      yl.push_back(labels[i]);
    } else {
      sh.push_back(scores[i]);
      yh.push_back(labels[i]);
    }
  }
  out.n_low = sl.size();
  out.n_high = sh.size();
  if (detail::both_classes(yl)) out.auc_low = auc(sl, yl);
  if (detail::both_classes(yh)) out.auc_high = auc(sh, yh);
  if (is_missing(out.auc_low) || is_missing(out.auc_high)) out.flag = "empty or single-class group";
  return out;
}

/// Author-community count of each interaction's full history, for the community policy.
inline std::map<InteractionKey, double> interaction_ccn(const ClaimCorpus& corpus,
                                                        const std::vector<InteractionKey>& keys, std::uint64_t seed) {
  std::vector<double> v(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    v[i] = batch_community_count(corpus, keys[i], last_claim_year(corpus.at(keys[i])), Window::unbounded(),
                                 EntityMode::Authors, seed);
  });
  std::map<InteractionKey, double> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = v[i];
  return out;
}

struct CommunityPolicyResult {
  double threshold = kMissing;
  std::vector<double> auc_low, auc_high;
  MeanCI low, high;
  std::vector<std::string> flags;
};

/// Splits every fold's test predictions by CCN at `threshold` (default: median CCN).
inline CommunityPolicyResult community_policy(const EvalReport& rep, const std::map<InteractionKey, double>& ccn,
                                              std::optional<double> threshold = std::nullopt) {
  CommunityPolicyResult out;
  if (threshold) {
    out.threshold = *threshold;
  } else {
    std::vector<double> v;
    for (const auto& [k, c] : ccn) v.push_back(c);
    out.threshold = stats::median(v);
  }
  for (const auto& fr : rep.folds) {
    if (!fr.flag.empty()) continue;
    std::vector<double> c;
    for (const auto& k : fr.keys) c.push_back(ccn.at(k));
    const auto s = policy_community_split(fr.scores, fr.labels, c, out.threshold);
    if (!s.flag.empty()) {
      out.flags.push_back(s.flag);
      continue;
    }
    out.auc_low.push_back(s.auc_low);
    out.auc_high.push_back(s.auc_high);
  }
  out.low = mean_ci95(out.auc_low);
  out.high = mean_ci95(out.auc_high);
  return out;
}

struct ResampleRange {
  double beta_min = kMissing;  // slope of the input (gamma = 1)
  double beta_max = kMissing;  // steepest slope with a valid fit
  double gamma_min = 1.0;
};

namespace detail {

inline std::vector<double> target_counts(const ClaimCorpus& corpus, double gamma) {
  std::vector<double> m;
  for (const auto& [k, rec] : corpus.interactions) {
    const double n = static_cast<double>(rec.claims.size());
    m.push_back(std::max(1.0, std::min(n, std::round(std::pow(n, gamma)))));
  }
  return m;
}

inline std::optional<double> slope_at(const ClaimCorpus& corpus, double gamma) {
  try {
    return fit_zipf(target_counts(corpus, gamma));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Slopes reachable by shrinking each interaction's claims from n to round(n^gamma).
inline ResampleRange resample_range(const ClaimCorpus& corpus) {
  ResampleRange r;
  const auto b0 = detail::slope_at(corpus, 1.0);
  if (!b0) throw Error("claim counts admit no power-law fit");
  r.beta_min = *b0;
  r.beta_max = *b0;
  for (double g = 0.99; g > 0.0; g -= 0.01) {
    const auto b = detail::slope_at(corpus, g);
    if (!b) break;
    if (*b > r.beta_max) {
      r.beta_max = *b;
      r.gamma_min = g;
    }
  }
  return r;
}

/// Subsamples claims per interaction (keeping at least one) so that the claim-count
/// distribution's fitted slope matches beta_target within 0.1. Dropping claims only
/// steepens the distribution, so targets below the input slope are unreachable.
inline ClaimCorpus policy_resample_lengths(const ClaimCorpus& corpus, double beta_target, std::uint64_t seed,
                                           double* achieved = nullptr) {
  const auto range = resample_range(corpus);
  if (beta_target < range.beta_min - 0.1 || beta_target > range.beta_max + 0.1) {
    throw Error("slope " + text::fmt(beta_target) + " outside achievable interval [" + text::fmt(range.beta_min) +
                ", " + text::fmt(range.beta_max) + "]");
  }
  double lo = range.gamma_min, hi = 1.0, gamma = 1.0;
  double best_gap = std::abs(range.beta_min - beta_target);
  for (int it = 0; it < 60 && best_gap > 1e-3; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto b = detail::slope_at(corpus, mid);
    if (!b) {
      lo = mid;
      continue;
    }
    if (std::abs(*b - beta_target) < best_gap) {
      best_gap = std::abs(*b - beta_target);
      gamma = mid;
    }
    // Slope decreases as gamma grows.
    if (*b > beta_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best_gap > 0.1) throw Error("could not match slope " + text::fmt(beta_target));

  ClaimCorpus out;
  for (const auto& [k, rec] : corpus.interactions) {
    const double n = static_cast<double>(rec.claims.size());
    const auto m = static_cast<std::size_t>(std::max(1.0, std::min(n, std::round(std::pow(n, gamma)))));
    Rng rng(derive_seed(seed, hash_string(k.str())));
    std::vector<std::size_t> idx(rec.claims.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    InteractionRecord r;
    r.key = k;
    r.strength = rec.strength;
    for (auto i : idx) {
      r.claims.push_back(rec.claims[i]);
      out.publications[rec.claims[i].publication] = corpus.publication(rec.claims[i].publication);
    }
    out.interactions[k] = std::move(r);
  }
  if (achieved) *achieved = fit_zipf(claim_counts(out));
  return out;
}

}  // namespace claimcal
