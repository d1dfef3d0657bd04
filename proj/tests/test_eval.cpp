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

#include <gtest/gtest.h>

#include "claimcal/eval.hpp"
#include "claimcal/synth.hpp"

namespace claimcal {
namespace {

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::vector<InteractionKey> make_keys(std::size_t n) {
  std::vector<InteractionKey> keys;
  for (std::size_t i = 0; i < n; ++i) keys.push_back({GeneId("S" + std::to_string(i)), GeneId("T")});
  return keys;
}

// Folds ---------------------------------------------------------------------------------

TEST(GroupedKfold, EachInteractionInExactlyOneFold) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 4));
    const auto n = static_cast<std::size_t>(k) + uniform_index(rng, 60);
    const auto keys = make_keys(n);
    const auto plan = grouped_kfold(keys, 4, k, static_cast<std::uint64_t>(trial));
    ASSERT_EQ(plan.fold.size(), 4u);
    for (int r = 0; r < 4; ++r) {
      std::vector<int> sizes(static_cast<std::size_t>(k), 0);
      for (const auto& key : keys) {
        const int f = plan.fold_of(r, key);
        ASSERT_GE(f, 0);
        ASSERT_LT(f, k);
        ++sizes[static_cast<std::size_t>(f)];
      }
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      EXPECT_LE(*hi - *lo, 1);
    }
  }
}

TEST(GroupedKfold, Examples) {
  const auto keys = make_keys(9);
  const auto plan = grouped_kfold(keys, 20, 3, 5);
  for (int r = 0; r < 20; ++r) {
    std::map<int, int> sizes;
    for (const auto& key : keys) ++sizes[plan.fold_of(r, key)];
    EXPECT_EQ(sizes, (std::map<int, int>{{0, 3}, {1, 3}, {2, 3}}));
  }
  EXPECT_EQ(grouped_kfold(keys, 20, 3, 5).fold, plan.fold);
  EXPECT_NE(grouped_kfold(keys, 20, 3, 6).fold, plan.fold);

  EXPECT_THROW(grouped_kfold(make_keys(2), 1, 3, 1), Error);
  EXPECT_THROW(grouped_kfold(keys, 1, 1, 1), Error);
  EXPECT_THROW(plan.fold_of(0, {GeneId("nope"), GeneId("T")}), Error);
}

ClaimCorpus counts_corpus(const std::vector<int>& counts) {
  ClaimCorpus c;
  std::size_t pub = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    InteractionRecord rec;
    rec.key = {GeneId("S" + std::to_string(i)), GeneId("T")};
    for (int j = 0; j < counts[i]; ++j) {
      ClaimRecord cr;
      cr.interaction = rec.key;
      cr.publication = PublicationId("P" + std::to_string(pub++));
      cr.year = 2000;
      cr.polarity = j % 2;
      rec.claims.push_back(cr);
      PublicationMeta p;
      p.id = cr.publication;
      p.year = 2000;
      c.publications[p.id] = p;
    }
    c.interactions[rec.key] = rec;
  }
  return c;
}

TEST(PopularityKfold, FoldsBalancedWithinDeciles) {
  Rng rng(2);
  std::vector<int> counts;
  for (int i = 0; i < 200; ++i) counts.push_back(1 + static_cast<int>(uniform_index(rng, 50)));
  const auto corpus = counts_corpus(counts);
  std::vector<InteractionKey> keys;
  for (const auto& [k, r] : corpus.interactions) keys.push_back(k);
  const auto strata = popularity_strata(corpus, keys);
  const auto plan = popularity_kfold(corpus, keys, 5, 3, 9);
  for (int r = 0; r < 5; ++r) {
    std::map<int, std::vector<int>> per;
    for (const auto& k : keys) {
      auto& v = per[strata.at(k)];
      v.resize(3);
      ++v[static_cast<std::size_t>(plan.fold_of(r, k))];
    }
    for (const auto& [s, v] : per) {
      EXPECT_LE(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()), 1) << s;
    }
  }
}

// Zipf law -------------------------------------------------------------------------------

// Devroye's rejection sampler for the unbounded Zipf law with exponent a > 1.
int zipf_draw(Rng& rng, double a) {
  const double b = std::pow(2.0, a - 1.0);
  for (;;) {
    const double u = 1.0 - uniform01(rng), v = uniform01(rng);
    const double x = std::floor(std::pow(u, -1.0 / (a - 1.0)));
    if (x > 1e9) continue;
    const double t = std::pow(1.0 + 1.0 / x, a - 1.0);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<int>(x);
  }
}

TEST(FitZipf, RecoversExponent) {
  for (double a : {1.5, 2.0, 2.5}) {
    Rng rng(static_cast<std::uint64_t>(a * 10));
    std::vector<int> x(100000);
    for (auto& v : x) v = zipf_draw(rng, a);
    EXPECT_NEAR(fit_zipf(x), a, 0.05) << a;
  }
}

TEST(FitZipf, DegenerateInputIsAnError) {
  EXPECT_THROW(fit_zipf(std::vector<int>(50, 3)), Error);
  EXPECT_THROW(fit_zipf(std::vector<int>{1, 2, 3, 4, 1, 2}), Error);
  EXPECT_THROW(fit_zipf(std::vector<int>{1, 2, 3, 4, 5, 0}), Error);
}

TEST(FitZipf, SteeperSampleGivesLargerExponent) {
  Rng rng(4);
  std::vector<int> x(20000);
  for (auto& v : x) v = zipf_draw(rng, 2.0);
  const double base = fit_zipf(x);
  // Shrinking every count toward 1 steepens the law.
  for (auto& v : x) v = std::max(1, static_cast<int>(std::round(std::sqrt(static_cast<double>(v)))));
  EXPECT_GT(fit_zipf(x), base);
}

class SplitCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    GenConfig cfg;
    cfg.n_interactions = 1500;
    cfg.seed = 17;
    corpus_ = new ClaimCorpus(generate_corpus(cfg).corpus);
  }
  static void TearDownTestSuite() {
    delete corpus_;
    corpus_ = nullptr;
  }
  static ClaimCorpus* corpus_;
};
ClaimCorpus* SplitCorpus::corpus_ = nullptr;

TEST_F(SplitCorpus, NoInteractionOnBothSides) {
  const auto s = zipf_claim_split(*corpus_, 0.7, 3);
  EXPECT_EQ(s.train_interactions.size() + s.test_interactions.size(), corpus_->interactions.size());
  for (const auto& k : s.train_interactions) EXPECT_FALSE(s.test_interactions.contains(k));
  for (const auto& c : s.train_claims) EXPECT_TRUE(s.train_interactions.contains(c.interaction));
  for (const auto& c : s.test_claims) EXPECT_TRUE(s.test_interactions.contains(c.interaction));
  EXPECT_EQ(s.train_claims.size() + s.test_claims.size(), corpus_->claim_count());
}

TEST_F(SplitCorpus, DecileSharesWithinBinomialBound) {
  const double f = 0.6;
  const auto s = zipf_claim_split(*corpus_, f, 8);
  std::vector<InteractionKey> keys;
  for (const auto& [k, r] : corpus_->interactions) keys.push_back(k);
  const auto strata = popularity_strata(*corpus_, keys);
  std::map<int, std::pair<double, double>> share;  // train, total
  for (const auto& k : keys) {
    auto& [tr, n] = share[strata.at(k)];
    tr += s.train_interactions.contains(k) ? 1.0 : 0.0;
    n += 1.0;
  }
  ASSERT_EQ(share.size(), 10u);
  for (const auto& [d, v] : share) {
    const double half = 2.5758293035489 * std::sqrt(f * (1.0 - f) / v.second);
    EXPECT_NEAR(v.first / v.second, f, half) << "decile " << d;
  }
}

TEST_F(SplitCorpus, TrainAndTestShareZipfExponent) {
  const auto s = zipf_claim_split(*corpus_, 0.5, 5);
  std::vector<int> tr, te;
  for (const auto& k : s.train_interactions) tr.push_back(static_cast<int>(corpus_->at(k).claims.size()));
  for (const auto& k : s.test_interactions) te.push_back(static_cast<int>(corpus_->at(k).claims.size()));
  EXPECT_LT(std::abs(fit_zipf(tr) - fit_zipf(te)), 0.2);
  EXPECT_THROW(zipf_claim_split(*corpus_, 1.0, 5), Error);
  EXPECT_THROW(zipf_claim_split(*corpus_, 0.0, 5), Error);
}

// Statistics -----------------------------------------------------------------------------

TEST(InfoGain, Examples) {
  EXPECT_DOUBLE_EQ(info_gain(std::vector<double>(7, 0.5)), 0.0);
  EXPECT_DOUBLE_EQ(info_gain({0.0, 1.0, 1.0, 0.0}), 1.0);
  const double h = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1)) / std::log(2.0);
  EXPECT_NEAR(info_gain({0.9}), 1.0 - h, 1e-12);
  EXPECT_NEAR(info_gain({0.9}), 0.531, 1e-3);
  EXPECT_THROW(info_gain({}), Error);
  EXPECT_THROW(info_gain({1.2}), Error);
}

TEST(InfoGain, BoundedAndMonotoneInEntropy) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + uniform_index(rng, 30));
    for (auto& v : p) v = uniform01(rng);
    const double ig = info_gain(p);
    EXPECT_GE(ig, 0.0);
    EXPECT_LE(ig, 1.0);
    // Pushing one prediction away from 0.5 lowers its entropy.
    auto q = p;
    q[0] = q[0] < 0.5 ? q[0] / 2.0 : 1.0 - (1.0 - q[0]) / 2.0;
    EXPECT_GE(info_gain(q), ig);
  }
}

TEST(MeanCi95, StudentInterval) {
  const auto c = mean_ci95({1.0, 2.0, 3.0});
  // With 2 dof the t quantile has the closed form (2p-1)/sqrt(2p(1-p)); sd = 1.
  const double t = 0.95 / std::sqrt(2.0 * 0.975 * 0.025);
  const double half = t / std::sqrt(3.0);
  EXPECT_DOUBLE_EQ(c.mean, 2.0);
  EXPECT_NEAR(c.low, 2.0 - half, 1e-12);
  EXPECT_NEAR(c.high, 2.0 + half, 1e-12);
  EXPECT_TRUE(is_missing(mean_ci95({4.0}).low));
  EXPECT_TRUE(is_missing(mean_ci95({}).mean));
}

TEST(SpearmanTest, Examples) {
  const auto up = spearman_test({1, 2, 3, 4, 5}, {2, 4, 8, 16, 32});
  EXPECT_DOUBLE_EQ(up.rho, 1.0);
  EXPECT_DOUBLE_EQ(up.p_one_sided, 0.0);
  const auto down = spearman_test({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
  EXPECT_DOUBLE_EQ(down.rho, -1.0);
  EXPECT_DOUBLE_EQ(down.p_one_sided, 1.0);
  // rho = 1 - 6*sum(d^2)/(n(n^2-1)) with d = (0,0,1,-1,0) -> 0.9
  const auto mostly = spearman_test({1, 2, 3, 4, 5}, {1, 2, 4, 3, 5});
  EXPECT_NEAR(mostly.rho, 0.9, 1e-12);
  EXPECT_GT(mostly.p_one_sided, 0.0);
  EXPECT_LT(mostly.p_one_sided, 0.05);
  EXPECT_TRUE(is_missing(spearman_test({1, 2}, {1, 2}).rho));
}

// Evaluation ------------------------------------------------------------------------------

// Small generated corpus with hand-built feature tables: IPS_signal tracks the
// neutral class (scaled by `signal`), JQ tracks claim correctness, and the rest is noise.
struct Fixture {
  SyntheticCorpus synth;
  EvalInputs in;
  std::vector<InteractionKey> keys;
};

Fixture make_fixture(double signal, std::uint64_t seed = 3) {
  Fixture fx;
  GenConfig cfg;
  cfg.n_interactions = 240;
  cfg.max_claims = 12;
  cfg.n_genes = 400;
  cfg.hub_genes = 20;
  cfg.seed = seed;
  fx.synth = generate_corpus(cfg);
  fx.in.corpus = &fx.synth.corpus;
  for (const auto& [k, tr] : fx.synth.truth) {
    fx.in.labels[k] = tr.label;
    fx.keys.push_back(k);
  }
  Rng rng(derive_seed(seed, 99));
  auto& IT = fx.in.interactions;
  IT.names = {"IPS_signal", "deg_noise"};
  auto& CT = fx.in.claims;
  CT.names = {"JQ", "AR"};
  for (const auto& k : fx.keys) {
    const bool neu = is_neutral(fx.in.labels.at(k));
    IT.rows.push_back({signal * (neu ? 1.0 : 0.0) + 0.5 * normal(rng), normal(rng)});
    IT.interaction.push_back(k);
    IT.publication.emplace_back();
    IT.year.push_back(last_claim_year(fx.synth.corpus.at(k)));
    const int pos = positive_indicator(fx.in.labels.at(k));
    for (const auto& c : fx.synth.corpus.at(k).claims) {
      CT.rows.push_back({signal * claim_correctness(c.polarity, pos) + 0.5 * normal(rng), normal(rng)});
      CT.interaction.push_back(k);
      CT.publication.push_back(c.publication);
      CT.year.push_back(c.year);
    }
  }
  return fx;
}

TEST(Evaluate, InformativeFeaturesGiveHighNeutralAuc) {
  const auto fx = make_fixture(3.0);
  const auto plan = grouped_kfold(fx.keys, 20, 3, 1);
  const auto rep = evaluate(fx.in, Task::Neutral, plan);
  EXPECT_EQ(rep.auc_samples.size(), 60u);
  EXPECT_GE(rep.auc.mean, 0.85);
  EXPECT_GT(rep.families.at("IPS").mean, rep.families.at("degrees").mean);
}

TEST(Evaluate, NoiseFeaturesGiveChanceAuc) {
  const auto fx = make_fixture(0.0);
  const auto plan = grouped_kfold(fx.keys, 20, 3, 2);
  for (auto task : {Task::Neutral, Task::PositiveDirect}) {
    const auto rep = evaluate(fx.in, task, plan);
    EXPECT_GE(rep.auc.mean, 0.45) << to_string(task);
    EXPECT_LE(rep.auc.mean, 0.55) << to_string(task);
  }
}

TEST(Evaluate, OracleCorrectnessMakesBayesExact) {
  const auto fx = make_fixture(3.0);
  const auto plan = grouped_kfold(fx.keys, 4, 3, 3);
  EvalOptions opt;
  opt.oracle_claim_correctness = true;
  const auto rep = evaluate(fx.in, Task::PositiveBayes, plan, opt);
  ASSERT_EQ(rep.conditional_auc_samples.size(), 12u);
  for (double a : rep.conditional_auc_samples) EXPECT_DOUBLE_EQ(a, 1.0);
}

TEST(Evaluate, ClaimModelsRun) {
  const auto fx = make_fixture(3.0);
  const auto plan = grouped_kfold(fx.keys, 2, 3, 4);
  const auto cc = evaluate(fx.in, Task::ClaimCorrectness, plan);
  EXPECT_EQ(cc.auc_samples.size(), 6u);
  EXPECT_GE(cc.auc.mean, 0.9);
  const auto pb = evaluate(fx.in, Task::PositiveBayes, plan);
  EXPECT_EQ(pb.auc_samples.size(), 6u);
  EXPECT_GE(pb.conditional_auc.mean, 0.8);
  EvalInputs no_claims = fx.in;
  no_claims.claims = {};
  EXPECT_THROW(evaluate(no_claims, Task::PositiveBayes, plan), Error);
}

TEST(Evaluate, NoTrainTestLeakage) {
  const auto fx = make_fixture(1.0);
  const auto plan = grouped_kfold(fx.keys, 20, 3, 5);
  const auto rep = evaluate(fx.in, Task::Neutral, plan);
  ASSERT_EQ(rep.folds.size(), 60u);
  for (int r = 0; r < 20; ++r) {
    std::map<InteractionKey, int> seen;
    for (const auto& fr : rep.folds) {
      if (fr.repeat != r) continue;
      for (const auto& k : fr.keys) {
        EXPECT_EQ(plan.fold_of(r, k), fr.fold);
        ++seen[k];
      }
    }
    EXPECT_EQ(seen.size(), fx.keys.size());
    for (const auto& [k, n] : seen) EXPECT_EQ(n, 1);
  }
}

TEST(Evaluate, BitReproducible) {
  const auto fx = make_fixture(1.0);
  const auto plan = grouped_kfold(fx.keys, 3, 3, 6);
  for (auto kind : {ModelKind::Forest, ModelKind::Logit}) {
    EvalOptions opt;
    opt.model = kind;
    const auto a = evaluate(fx.in, Task::PositiveDirect, plan, opt);
    const auto b = evaluate(fx.in, Task::PositiveDirect, plan, opt);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    for (std::size_t i = 0; i < a.folds.size(); ++i) EXPECT_EQ(a.folds[i].model.dump(), b.folds[i].model.dump());
  }
}

TEST(Evaluate, SingleClassFoldsAreSkippedAndFlagged) {
  auto fx = make_fixture(1.0);
  // Keep just two positive interactions; most test folds then lack a positive.
  int kept = 0;
  for (auto& [k, c] : fx.in.labels) {
    if (c == ClassLabel::Positive && ++kept > 2) c = ClassLabel::Negative;
  }
  const auto plan = grouped_kfold(fx.keys, 10, 3, 7);
  const auto rep = evaluate(fx.in, Task::PositiveDirect, plan);
  EXPECT_FALSE(rep.flags.empty());
  EXPECT_EQ(rep.auc_samples.size() + rep.flags.size(), 30u);

  EvalInputs missing = fx.in;
  missing.labels.erase(missing.labels.begin());
  EXPECT_FALSE(evaluate(missing, Task::Neutral, grouped_kfold(fx.keys, 1, 3, 1)).flags.empty());
}

// Policies -------------------------------------------------------------------------------

TEST(PolicyCommunitySplit, Examples) {
  const std::vector<double> s{0.9, 0.1, 0.8, 0.2, 0.3, 0.7};
  const std::vector<int> y{1, 0, 1, 0, 1, 0};
  const std::vector<double> ccn{1, 1, 1, 3, 3, 3};
  const auto r = policy_community_split(s, y, ccn, 2.0);
  EXPECT_EQ(r.n_low, 3u);
  EXPECT_EQ(r.n_high, 3u);
  EXPECT_DOUBLE_EQ(r.auc_low, 1.0);   // 0.9, 0.8 above 0.1
  EXPECT_DOUBLE_EQ(r.auc_high, 0.5);  // 0.3 beats 0.2, loses to 0.7
  EXPECT_TRUE(r.flag.empty());

  const auto above = policy_community_split(s, y, ccn, 10.0);
  EXPECT_EQ(above.n_high, 0u);
  EXPECT_TRUE(is_missing(above.auc_high));
  EXPECT_FALSE(above.flag.empty());
  EXPECT_THROW(policy_community_split(s, y, {1.0}, 2.0), Error);
}

TEST(PolicyCommunitySplit, IdenticalGroupsAgree) {
  Rng rng(7);
  std::vector<double> diff;
  for (int fold = 0; fold < 60; ++fold) {
    std::vector<double> s, ccn;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
      y.push_back(static_cast<int>(uniform_index(rng, 2)));
      s.push_back(y.back() + normal(rng));
      ccn.push_back(static_cast<double>(uniform_index(rng, 10)));
    }
    const auto r = policy_community_split(s, y, ccn, 4.5);
    diff.push_back(r.auc_high - r.auc_low);
  }
  const auto c = mean_ci95(diff);
  EXPECT_LT(c.low, 0.0);
  EXPECT_GT(c.high, 0.0);
}

TEST(PolicyCommunitySplit, StrongerSignalInHighGroupIsDetected) {
  Rng rng(8);
  std::vector<double> diff;
  for (int fold = 0; fold < 60; ++fold) {
    std::vector<double> s, ccn;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
      const double c = static_cast<double>(uniform_index(rng, 10));
      y.push_back(static_cast<int>(uniform_index(rng, 2)));
      s.push_back((c > 4.5 ? 1.5 : 0.5) * y.back() + normal(rng));
      ccn.push_back(c);
    }
    const auto r = policy_community_split(s, y, ccn, 4.5);
    diff.push_back(r.auc_high - r.auc_low);
  }
  EXPECT_GT(mean_ci95(diff).low, 0.0);
}

TEST(CommunityPolicy, MedianThresholdOverReport) {
  const auto fx = make_fixture(2.0);
  const auto plan = grouped_kfold(fx.keys, 2, 3, 9);
  const auto rep = evaluate(fx.in, Task::Neutral, plan);
  std::map<InteractionKey, double> ccn;
  for (std::size_t i = 0; i < fx.keys.size(); ++i) ccn[fx.keys[i]] = static_cast<double>(i % 7);
  const auto res = community_policy(rep, ccn);
  EXPECT_DOUBLE_EQ(res.threshold, 3.0);
  EXPECT_EQ(res.auc_low.size() + res.flags.size(), 6u);
  EXPECT_EQ(community_policy(rep, ccn, 100.0).flags.size(), 6u);
}

TEST_F(SplitCorpus, ResampleFixedPoint) {
  const double beta0 = fit_zipf(claim_counts(*corpus_));
  double achieved = 0.0;
  const auto out = policy_resample_lengths(*corpus_, beta0, 1, &achieved);
  EXPECT_NEAR(achieved, beta0, 0.1);
  EXPECT_EQ(out.interactions.size(), corpus_->interactions.size());
  EXPECT_GE(static_cast<double>(out.claim_count()), 0.95 * static_cast<double>(corpus_->claim_count()));
}

TEST_F(SplitCorpus, ResampleHitsTargetsAndKeepsOneClaim) {
  const auto range = resample_range(*corpus_);
  ASSERT_GT(range.beta_max, range.beta_min + 0.3);
  const double target = range.beta_min + 0.6 * (range.beta_max - range.beta_min);
  double achieved = 0.0;
  const auto out = policy_resample_lengths(*corpus_, target, 2, &achieved);
  EXPECT_NEAR(achieved, target, 0.1);
  ASSERT_EQ(out.interactions.size(), corpus_->interactions.size());
  for (const auto& [k, rec] : out.interactions) {
    EXPECT_GE(rec.claims.size(), 1u);
    EXPECT_LE(rec.claims.size(), corpus_->at(k).claims.size());
    for (const auto& c : rec.claims) EXPECT_TRUE(out.publications.contains(c.publication));
  }
  EXPECT_EQ(policy_resample_lengths(*corpus_, target, 2).interactions.begin()->second.claims,
            out.interactions.begin()->second.claims);
}

TEST_F(SplitCorpus, UnreachableSlopeIsAnError) {
  const auto range = resample_range(*corpus_);
  EXPECT_THROW(policy_resample_lengths(*corpus_, range.beta_min - 0.5, 1), Error);
  EXPECT_THROW(policy_resample_lengths(*corpus_, range.beta_max + 5.0, 1), Error);
  try {
    policy_resample_lengths(*corpus_, range.beta_max + 5.0, 1);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("achievable"), std::string::npos);
  }
}

}  // namespace
}  // namespace claimcal
