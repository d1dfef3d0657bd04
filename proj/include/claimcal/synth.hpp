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

// Synthetic claim corpora with known classes, strengths and planted signals.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "claimcal/common.hpp"
#include "claimcal/corpus.hpp"
#include "claimcal/features.hpp"
#include "claimcal/partition.hpp"
#include "json.hpp"

namespace claimcal {

struct GenConfig {
  std::size_t n_interactions = 4000;
  std::array<double, 3> class_priors{0.25, 0.5, 0.25};  // negative, neutral, positive
  // Beta law of the claim polarity rate mu per class.
  std::array<std::array<double, 2>, 3> beta_params{{{3.0, 7.0}, {7.0, 3.0}, {9.0, 1.0}}};
  // Strength band [lo, hi] per class.
  std::array<std::array<double, 2>, 3> strength_bands{{{0.0, 0.25}, {0.35, 0.65}, {0.75, 1.0}}};
  double zipf_exponent = 2.0;
  int max_claims = 100;
  std::size_t n_genes = 1500;
  std::size_t hub_genes = 60;
  // Reuse: each entity slot is taken from the interaction's earlier entities with
  // this probability (weighted by prior use, among the `*_pool` most used),
  // otherwise a fresh entity is minted.
  double author_reuse = 0.5;
  double affiliation_reuse = 0.6;
  double reference_reuse = 0.5;
  std::size_t author_pool = 30;
  std::size_t affiliation_pool = 10;
  std::size_t reference_pool = 60;
  int first_year = 1990;
  int last_year = 2014;
  double signal_strength = 1.0;  // scales every planted feature-class link; 0 gives none
  double missing_rate = 0.03;    // journal score / affiliation rank left missing
  std::uint64_t seed = 1;

  void validate() const {
    double s = 0.0;
    for (double p : class_priors) {
      if (p < 0.0) throw Error("class priors must be nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error("class priors must sum to 1");
    if (n_interactions == 0 || n_genes < 2 || hub_genes == 0 || hub_genes > n_genes || max_claims < 1) {
      throw Error("generator counts must be positive");
    }
    for (const auto& b : beta_params) {
      if (!(b[0] > 0.0 && b[1] > 0.0)) throw Error("beta parameters must be positive");
    }
    for (const auto& b : strength_bands) {
      if (!(0.0 <= b[0] && b[0] <= b[1] && b[1] <= 1.0)) throw Error("strength bands must lie in [0,1]");
    }
    if (!(zipf_exponent > 1.0)) throw Error("zipf exponent must exceed 1");
    if (first_year > last_year) throw Error("empty year range");
    for (double r : {author_reuse, affiliation_reuse, reference_reuse, missing_rate, signal_strength}) {
      if (r < 0.0 || r > 1.0) throw Error("probabilities and signal strength must lie in [0,1]");
    }
  }
};

inline nlohmann::json gen_config_to_json(const GenConfig& c) {
  return nlohmann::json{{"n_interactions", c.n_interactions},
                        {"class_priors", c.class_priors},
                        {"beta_params", c.beta_params},
                        {"strength_bands", c.strength_bands},
                        {"zipf_exponent", c.zipf_exponent},
                        {"max_claims", c.max_claims},
                        {"n_genes", c.n_genes},
                        {"hub_genes", c.hub_genes},
                        {"author_reuse", c.author_reuse},
                        {"affiliation_reuse", c.affiliation_reuse},
                        {"reference_reuse", c.reference_reuse},
                        {"author_pool", c.author_pool},
                        {"affiliation_pool", c.affiliation_pool},
                        {"reference_pool", c.reference_pool},
                        {"first_year", c.first_year},
                        {"last_year", c.last_year},
                        {"signal_strength", c.signal_strength},
                        {"missing_rate", c.missing_rate},
                        {"seed", c.seed}};
}

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
inline GenConfig gen_config_from_json(const nlohmann::json& j) {
  GenConfig c;
  const auto defaults = gen_config_to_json(c);
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw Error("unknown generator option " + k);
  }
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("n_interactions", c.n_interactions);
  get("class_priors", c.class_priors);
  get("beta_params", c.beta_params);
  get("strength_bands", c.strength_bands);
  get("zipf_exponent", c.zipf_exponent);
  get("max_claims", c.max_claims);
  get("n_genes", c.n_genes);
  get("hub_genes", c.hub_genes);
  get("author_reuse", c.author_reuse);
  get("affiliation_reuse", c.affiliation_reuse);
  get("reference_reuse", c.reference_reuse);
  get("author_pool", c.author_pool);
  get("affiliation_pool", c.affiliation_pool);
  get("reference_pool", c.reference_pool);
  get("first_year", c.first_year);
  get("last_year", c.last_year);
  get("signal_strength", c.signal_strength);
  get("missing_rate", c.missing_rate);
  get("seed", c.seed);
  c.validate();
  return c;
}

struct TruthRecord {
  ClassLabel label = ClassLabel::Neutral;
  double mu = 0.5;
  double strength = 0.5;
  bool independent = false;  // low entity reuse, cleaner claims
};

struct SyntheticCorpus {
  ClaimCorpus corpus;
  StrengthMap strengths;
  std::map<InteractionKey, TruthRecord> truth;
};

/// Draws from a Zipf law on {1..cap} by inverse CDF.
class ZipfSampler {
 public:
  ZipfSampler(double s, int cap) {
    if (cap < 1) throw Error("zipf cap must be positive");
    double acc = 0.0;
    for (int k = 1; k <= cap; ++k) {
      acc += std::pow(static_cast<double>(k), -s);
      cdf_.push_back(acc);
    }
    for (auto& v : cdf_) v /= acc;
  }
  int operator()(Rng& rng) const {
    const double u = uniform01(rng);
    return static_cast<int>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin()) + 1;
  }

 private:
  std::vector<double> cdf_;
};

namespace detail {

// Entity usage on one interaction, for preferential reuse.
struct EntityPool {
  std::map<std::string, int> uses;

  std::string pick(Rng& rng, double reuse, std::size_t cap, const std::string& prefix, std::size_t& counter) {
    if (!uses.empty() && uniform01(rng) < reuse) {
      std::vector<std::pair<int, std::string>> top;
      for (const auto& [e, u] : uses) top.emplace_back(u, e);
      std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (top.size() > cap) top.resize(std::max<std::size_t>(cap, 1));
      double total = 0.0;
      for (const auto& t : top) total += t.first;
      double u = uniform01(rng) * total;
      for (const auto& t : top) {
        u -= t.first;
        if (u <= 0.0) return t.second;
      }
      return top.back().second;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%07zu", prefix.c_str(), ++counter);
    return buf;
  }
};

inline int poisson(Rng& rng, double lambda) { return std::poisson_distribution<int>(lambda)(rng); }

}  // namespace detail

/// Deterministic given cfg.seed. Per interaction: class ~ priors, mu ~ Beta(class),
/// n ~ Zipf, polarities ~ Bernoulli(mu), strength ~ U(class band).
///
/// Planted signals, each scaled by signal_strength:
///  - neutral interactions favour a pool of hub genes;
///  - neutral claims arrive in a short burst, others spread over the remaining years;
///  - correct claims get higher journal scores and more top-ranked affiliations;
///  - "independent" interactions (half) reuse few entities and have claims pushed
///    toward their class, "dependent" ones reuse heavily and drift toward 0.5.
inline SyntheticCorpus generate_corpus(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticCorpus out;
  const double s = cfg.signal_strength;
  const ZipfSampler zipf(cfg.zipf_exponent, cfg.max_claims);
  std::discrete_distribution<int> cls({cfg.class_priors[0], cfg.class_priors[1], cfg.class_priors[2]});
  std::normal_distribution<double> normal;
  std::size_t author_ctr = 0, aff_ctr = 0, ref_ctr = 0, pub_ctr = 0;

  auto gene = [&](std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "G%05zu", i);
    return GeneId(buf);
  };
  const ClassLabel labels[3] = {ClassLabel::Negative, ClassLabel::Neutral, ClassLabel::Positive};

  while (out.truth.size() < cfg.n_interactions) {
    const int c = cls(rng);
    const bool neutral = c == 1;
    const bool hub = neutral && uniform01(rng) < 0.7 * s;
    const std::size_t pool = hub ? cfg.hub_genes : cfg.n_genes;
    // Redraw only the pair on a collision so that the class mix stays unbiased.
    InteractionKey key;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw Error("gene pool too small for the requested interactions");
      const std::size_t src = uniform_index(rng, pool), tgt = uniform_index(rng, pool);
      if (src == tgt) continue;
      key = InteractionKey{gene(src), gene(tgt)};
      if (!out.truth.contains(key)) break;
    }

    TruthRecord tr;
    tr.label = labels[c];
    tr.independent = uniform01(rng) < 0.5;
    const auto& bp = cfg.beta_params[static_cast<std::size_t>(c)];
    std::gamma_distribution<double> ga(bp[0], 1.0), gb(bp[1], 1.0);
    const double x = ga(rng), yv = gb(rng);
    double mu = x / (x + yv);
    if (!neutral) {
      const double target = c == 2 ? 1.0 : 0.0;
      mu = tr.independent ? mu + 0.5 * s * (target - mu) : mu + 0.5 * s * (0.5 - mu);
    }
    tr.mu = mu;
    const auto& band = cfg.strength_bands[static_cast<std::size_t>(c)];
    tr.strength = band[0] + (band[1] - band[0]) * uniform01(rng);

    InteractionRecord rec;
    rec.key = key;
    rec.strength = tr.strength;
    const int n = zipf(rng);
    const int span = cfg.last_year - cfg.first_year;
    const int y0 = cfg.first_year + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(span) + 1));
    const bool burst = neutral && uniform01(rng) < s;
    const double reuse_scale = tr.independent ? 1.0 - 0.8 * s : 1.0;
    detail::EntityPool authors, affs, refs;

    for (int k = 0; k < n; ++k) {
      int year = y0;
      if (k > 0) {
        const int room = burst ? std::min(1, cfg.last_year - y0) : cfg.last_year - y0;
        year = y0 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(room) + 1));
      }
      ClaimRecord cr;
      cr.interaction = key;
      char buf[16];
      std::snprintf(buf, sizeof buf, "P%07zu", ++pub_ctr);
      cr.publication = PublicationId(buf);
      cr.year = year;
      cr.polarity = uniform01(rng) < mu ? 1 : 0;
      rec.claims.push_back(cr);

      PublicationMeta pub;
      pub.id = cr.publication;
      pub.year = year;
      const int na = 1 + detail::poisson(rng, 3.0);
      for (int i = 0; i < na; ++i) {
        pub.authors.push_back(authors.pick(rng, cfg.author_reuse * reuse_scale, cfg.author_pool, "A", author_ctr));
      }
      const int nf = 1 + detail::poisson(rng, 1.0);
      for (int i = 0; i < nf; ++i) {
        pub.affiliations.push_back(
            affs.pick(rng, cfg.affiliation_reuse * reuse_scale, cfg.affiliation_pool, "F", aff_ctr));
      }
      const int nr = 3 + detail::poisson(rng, 8.0);
      for (int i = 0; i < nr; ++i) {
        pub.references.push_back(
            PublicationId(refs.pick(rng, cfg.reference_reuse * reuse_scale, cfg.reference_pool, "R", ref_ctr)));
      }
      auto dedup = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      };
      dedup(pub.authors);
      dedup(pub.affiliations);
      dedup(pub.references);
      for (const auto& a : pub.authors) ++authors.uses[a];
      for (const auto& a : pub.affiliations) ++affs.uses[a];
      for (const auto& r : pub.references) ++refs.uses[r.str()];

      // Correctness is only defined away from the neutral class.
      const double y = neutral ? 0.5 : claim_correctness(cr.polarity, c == 2 ? 1 : 0);
      const double shift = neutral ? 0.0 : (2.0 * y - 1.0);
      std::snprintf(buf, sizeof buf, "J%03zu", uniform_index(rng, 200));
      pub.journal = buf;
      const double jq = std::exp(0.6 * s * shift + 0.8 * normal(rng));
      if (uniform01(rng) >= cfg.missing_rate) pub.journal_score = jq;
      if (uniform01(rng) >= cfg.missing_rate) pub.top_affiliation = uniform01(rng) < 0.2 + 0.15 * s * shift;

      // Yearly citations follow a lognormal-shaped curve with Poisson noise.
      const double amp = std::exp(3.0 + normal(rng));
      const double cm = 0.5 + 1.5 * uniform01(rng), cs = 0.5 + 0.7 * uniform01(rng);
      for (int yy = year; yy <= cfg.last_year; ++yy) {
        const double t = static_cast<double>(yy - year + 1);
        const double z = std::log(t) - cm;
        const double rate = amp * std::exp(-z * z / (2.0 * cs * cs)) / (t * cs * std::sqrt(2.0 * std::numbers::pi));
        pub.citation_history[yy] = detail::poisson(rng, rate);
      }
      out.corpus.publications[pub.id] = std::move(pub);
    }
    detail::sort_claims(rec);
    out.strengths[key] = tr.strength;
    out.truth[key] = tr;
    out.corpus.interactions[key] = std::move(rec);
  }
  return out;
}

inline void write_truth(std::ostream& out, const SyntheticCorpus& s) {
  out << "source\ttarget\tclass\tmu\tstrength\tn_claims\tindependent\n";
  for (const auto& [key, tr] : s.truth) {
    out << key.source.str() << '\t' << key.target.str() << '\t' << to_string(tr.label) << '\t' << text::fmt(tr.mu)
        << '\t' << text::fmt(tr.strength) << '\t' << s.corpus.at(key).claims.size() << '\t'
        << (tr.independent ? 1 : 0) << '\n';
  }
}

// Enumeration oracle ------------------------------------------------------------------

/// Random sub-corpus of whole interactions holding between min_claims and max_claims claims.
inline ClaimCorpus slice_corpus(const ClaimCorpus& corpus, std::size_t min_claims, std::size_t max_claims,
                                std::uint64_t seed) {
  std::vector<InteractionKey> keys;
  for (const auto& [k, rec] : corpus.interactions) keys.push_back(k);
  Rng rng(seed);
  shuffle(keys, rng);
  ClaimCorpus out;
  std::size_t n = 0;
  for (const auto& k : keys) {
    if (n >= min_claims) break;
    const auto& rec = corpus.at(k);
    if (n + rec.claims.size() > max_claims) continue;
    out.interactions[k] = rec;
    for (const auto& c : rec.claims) out.publications[c.publication] = corpus.publication(c.publication);
    n += rec.claims.size();
  }
  return out;
}

struct ReferenceTables {
  FeatureTable interactions;
  FeatureTable claims;
};

namespace detail {

// Every quantity below is recomputed from the raw claim list with nested loops; no
// shared indices or caches from the feature pipeline are used. Community labels
// come from the same detectors, run on graphs assembled here.
struct BruteForce {
  const ClaimCorpus& corpus;
  FeatureOptions opt;
  std::vector<ClaimRecord> claims;

  BruteForce(const ClaimCorpus& c, FeatureOptions o) : corpus(c), opt(std::move(o)), claims(c.all_claims()) {}

  std::vector<ClaimRecord> on(const InteractionKey& a) const {
    std::vector<ClaimRecord> out;
    for (const auto& c : claims) {
      if (c.interaction == a) out.push_back(c);
    }
    return out;
  }

  int first_year(const InteractionKey& a) const {
    int t0 = std::numeric_limits<int>::max();
    for (const auto& c : on(a)) t0 = std::min(t0, c.year);
    return t0;
  }

  double mcp(const InteractionKey& a, int t) const {
    std::map<InteractionKey, std::pair<double, double>> acc;
    for (const auto& c : claims) {
      if (c.year > t) continue;
      acc[c.interaction].first += c.polarity;
      acc[c.interaction].second += 1.0;
    }
    const double mine = acc.at(a).first / acc.at(a).second;
    double below = 0.0;
    for (const auto& [k, v] : acc) below += (v.first / v.second < mine) ? 1.0 : 0.0;
    return below / static_cast<double>(acc.size());
  }

  std::array<double, 4> degree(const InteractionKey& a, int t) const {
    std::set<std::pair<GeneId, GeneId>> edges;
    for (const auto& c : claims) {
      if (c.year <= t) edges.insert({c.interaction.source, c.interaction.target});
    }
    std::array<double, 4> d{};
    for (const auto& [s, g] : edges) {
      d[0] += g == a.source;
      d[1] += s == a.source;
      d[2] += g == a.target;
      d[3] += s == a.target;
    }
    return d;
  }

  // (IPS, IPS_src, IPS_tgt, IPP) per partition variant.
  std::vector<std::array<double, 4>> partitions(const InteractionKey& a, int t) const {
    std::vector<GeneId> genes;
    std::vector<std::tuple<GeneId, GeneId, double>> edges;
    for (const auto& c : claims) {
      if (c.year > t) continue;
      genes.push_back(c.interaction.source);
      genes.push_back(c.interaction.target);
      bool found = false;
      for (auto& [s, g, w] : edges) {
        if (s == c.interaction.source && g == c.interaction.target) {
          w += 1.0;
          found = true;
        }
      }
      if (!found) edges.emplace_back(c.interaction.source, c.interaction.target, 1.0);
    }
    std::sort(genes.begin(), genes.end());
    genes.erase(std::unique(genes.begin(), genes.end()), genes.end());
    std::sort(edges.begin(), edges.end());
    auto idx = [&](const GeneId& g) {
      for (std::size_t i = 0; i < genes.size(); ++i) {
        if (genes[i] == g) return i;
      }
      throw Error("gene missing");
    };
    std::vector<std::array<double, 4>> out;
    const auto& vars = partition_variants();
    for (std::size_t v = 0; v < vars.size(); ++v) {
      IndexGraph g(genes.size());
      for (const auto& [s, tg, w] : edges) g.add_edge(idx(s), idx(tg), vars[v].weighted ? w : 1.0);
      const auto seed = derive_seed(opt.seed, 1000 + v + 10 * static_cast<std::uint64_t>(t));
      const auto lab = vars[v].method == CommunityMethod::Infomap ? infomap_partition(g, vars[v].directed, seed)
                                                                  : label_propagation(g, seed);
      const int ls = lab[idx(a.source)], lt = lab[idx(a.target)];
      double ss = 0.0, st = 0.0;
      for (int l : lab) {
        ss += l == ls;
        st += l == lt;
      }
      out.push_back({std::sqrt(ss * st), ss, st, ls == lt ? 1.0 : 0.0});
    }
    return out;
  }

  double cp(const InteractionKey& a, int t, const Window& w, bool strict) const {
    double n = 0.0;
    for (const auto& c : on(a)) {
      const bool upper = strict ? c.year < t : c.year <= t;
      const bool lower = w.is_unbounded() || c.year > t - w.length();
      n += upper && lower;
    }
    return n;
  }

  double flat(const InteractionKey& a, int t, const Window& w, bool strict) const {
    const int t0 = first_year(a);
    const int L = w.is_unbounded() ? t0 - 1 : t0 - w.length();
    if (t <= L) return kMissing;
    std::vector<double> x;
    for (const auto& c : on(a)) {
      if (c.year > L && (strict ? c.year < t : c.year <= t)) {
        x.push_back(static_cast<double>(c.year - L) / static_cast<double>(t - L));
      }
    }
    if (x.empty()) return kMissing;
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (double xi : x) {
      double le = 0.0, lt = 0.0;
      for (double xj : x) {
        le += xj <= xi;
        lt += xj < xi;
      }
      d = std::max({d, le / n - xi, xi - lt / n});
    }
    return d;
  }

  // Publications in the batch (t-w, t], sorted by id, with their entity sets.
  std::vector<std::pair<PublicationId, std::set<std::string>>> batch_sets(const InteractionKey& a, int t,
                                                                          const Window& w, EntityMode mode) const {
    std::map<PublicationId, std::set<std::string>> m;
    for (const auto& c : on(a)) {
      if (c.year > t || (!w.is_unbounded() && c.year <= t - w.length())) continue;
      const auto& p = corpus.publication(c.publication);
      std::set<std::string> e;
      if (mode == EntityMode::Authors) e.insert(p.authors.begin(), p.authors.end());
      if (mode == EntityMode::Affiliations) e.insert(p.affiliations.begin(), p.affiliations.end());
      if (mode == EntityMode::References) {
        for (const auto& r : p.references) e.insert(r.str());
      }
      m[c.publication] = e;
    }
    return {m.begin(), m.end()};
  }

  struct Batch {
    double bdep = kMissing, ccn = kMissing;
    std::map<PublicationId, std::array<double, 3>> per;  // cdep, csi, csa
  };

  Batch batch(const InteractionKey& a, int t, const Window& w, EntityMode mode) const {
    const auto U = batch_sets(a, t, w, mode);
    Batch b;
    std::map<std::string, double> deg;
    for (const auto& [u, e] : U) {
      for (const auto& v : e) deg[v] += 1.0;
    }
    const double nu = static_cast<double>(U.size());
    if (!deg.empty()) {
      std::vector<double> d;
      for (const auto& [v, x] : deg) d.push_back(x);
      std::sort(d.begin(), d.end(), std::greater<>());
      const double f = default_dependency_fraction(mode), lam = kDefaultDependencyExponent;
      std::size_t k = 0;
      while (static_cast<double>(k) < f * static_cast<double>(d.size()) - 1e-9) ++k;
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += std::pow(d[i], lam);
      b.bdep = s / static_cast<double>(k) / std::pow(nu, lam);
    }
    // Jaccard projection and claim communities.
    IndexGraph g(U.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
      for (std::size_t j = i + 1; j < U.size(); ++j) {
        double inter = 0.0;
        std::set<std::string> uni = U[i].second;
        for (const auto& v : U[j].second) {
          inter += U[i].second.contains(v);
          uni.insert(v);
        }
        if (inter > 0) g.add_edge(i, j, inter / static_cast<double>(uni.size()));
      }
    }
    const auto lab = infomap_partition(g, false, batch_seed(opt.seed, a, t, mode, w));
    std::set<int> ids(lab.begin(), lab.end());
    b.ccn = static_cast<double>(ids.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
      double shared = 0.0;
      for (const auto& v : U[i].second) {
        for (std::size_t j = 0; j < U.size(); ++j) shared += (j != i && U[j].second.contains(v));
      }
      const double du = static_cast<double>(U[i].second.size());
      const double cdep = (U.size() < 2 || du == 0.0) ? kMissing : shared / (du * (nu - 1.0));
      double size = 0.0;
      for (int l : lab) size += l == lab[i];
      b.per[U[i].first] = {cdep, size, size / nu};
    }
    return b;
  }

  // (NW, NHI) of publication u for claims dated strictly before t.
  std::pair<double, double> attention(const InteractionKey& a, int t, const PublicationId& u, EntityMode mode) const {
    std::map<std::string, double> w;
    bool any = false;
    for (const auto& c : on(a)) {
      if (c.year >= t) continue;
      any = true;
      const auto& p = corpus.publication(c.publication);
      const auto& list = mode == EntityMode::Authors ? p.authors : p.affiliations;
      std::set<std::string> e(list.begin(), list.end());
      for (const auto& v : e) w[v] += 1.0 / static_cast<double>(e.size());
    }
    if (!any || w.empty()) return {kMissing, kMissing};
    double total = 0.0;
    for (const auto& [v, x] : w) total += x;
    double hi = 0.0;
    for (const auto& [v, x] : w) hi += (x / total) * (x / total);
    const double K = static_cast<double>(w.size());
    const double nhi = K == 1.0 ? 1.0 : std::clamp((hi - 1.0 / K) / (1.0 - 1.0 / K), 0.0, 1.0);
    const auto& p = corpus.publication(u);
    const auto& list = mode == EntityMode::Authors ? p.authors : p.affiliations;
    std::set<std::string> own(list.begin(), list.end());
    if (own.empty()) return {kMissing, nhi};
    double s = 0.0;
    for (const auto& v : own) s += w.contains(v) ? w.at(v) / total : 0.0;
    return {s / static_cast<double>(own.size()), nhi};
  }
};

inline void add(FeatureTable& t, std::vector<double>& row, bool first, const std::string& name, double v) {
  if (first) t.names.push_back(name);
  row.push_back(v);
}

}  // namespace detail

/// Recomputes the enumerable features (degrees, IPS/IPP, CP/CD/FLAT, NW/NHI,
/// CDEP/BDEP, CCN/CSI/CSA, MCP/AMMCP, history length, year offsets) of a small
/// corpus by direct enumeration. Rows follow the pipeline's row order.
inline ReferenceTables brute_force_reference(const ClaimCorpus& corpus, const FeatureOptions& opt = {}) {
  ReferenceTables out;
  if (corpus.claim_count() > 200) throw Error("enumeration oracle is limited to 200 claims");
  const detail::BruteForce bf(corpus, opt);
  const bool strict_v[2] = {true, false};

  for (const auto& [a, rec] : corpus.interactions) {
    int t = std::numeric_limits<int>::min(), lo = std::numeric_limits<int>::max();
    for (const auto& c : bf.on(a)) {
      t = std::max(t, c.year);
      lo = std::min(lo, c.year);
    }
    auto& T = out.interactions;
    const bool first = T.rows.empty();
    std::vector<double> row;
    const double m = bf.mcp(a, t);
    detail::add(T, row, first, "MCP", m);
    detail::add(T, row, first, "AMMCP", std::abs(m - 0.5));
    if (opt.network) {
      const auto d = bf.degree(a, t);
      const char* dn[4] = {"deg_src_in", "deg_src_out", "deg_tgt_in", "deg_tgt_out"};
      for (int i = 0; i < 4; ++i) detail::add(T, row, first, dn[i], d[static_cast<std::size_t>(i)]);
      const auto parts = bf.partitions(a, t);
      for (std::size_t v = 0; v < parts.size(); ++v) {
        const auto nm = partition_variants()[v].name();
        detail::add(T, row, first, "IPS_" + nm, parts[v][0]);
        detail::add(T, row, first, "IPS_src_" + nm, parts[v][1]);
        detail::add(T, row, first, "IPS_tgt_" + nm, parts[v][2]);
        detail::add(T, row, first, "IPP_" + nm, parts[v][3]);
      }
    }
    detail::add(T, row, first, "dyear", static_cast<double>(t - lo));
    for (bool strict : strict_v) {
      for (const auto& w : opt.windows) {
        const auto sfx = std::string("_") + (strict ? "strict" : "rc") + "_" + w.label();
        const double cp = bf.cp(a, t, w, strict);
        detail::add(T, row, first, "CP" + sfx, cp);
        detail::add(T, row, first, "CD" + sfx, cp / static_cast<double>(t - lo + 1));
        detail::add(T, row, first, "FLAT" + sfx, bf.flat(a, t, w, strict));
      }
    }
    if (opt.bipartite) {
      for (auto mode : entity_modes()) {
        for (const auto& w : opt.windows) {
          const auto b = bf.batch(a, t, w, mode);
          double s = 0.0, n = 0.0;
          for (const auto& [u, v] : b.per) {
            if (is_missing(v[0])) continue;
            s += v[0];
            n += 1.0;
          }
          detail::add(T, row, first, std::string("CDEP_") + to_string(mode) + "_" + w.label(), n > 0 ? s / n : kMissing);
        }
      }
    }
    T.rows.push_back(std::move(row));
    T.interaction.push_back(a);
    T.publication.emplace_back();
    T.year.push_back(t);
  }

  for (const auto& [a, rec] : corpus.interactions) {
    const int t0 = bf.first_year(a);
    for (const auto& c : bf.on(a)) {
      const int t = c.year;
      auto& T = out.claims;
      const bool first = T.rows.empty();
      std::vector<double> row;
      if (opt.network) {
        const auto parts = bf.partitions(a, t);
        for (std::size_t v = 0; v < parts.size(); ++v) {
          const auto nm = partition_variants()[v].name();
          detail::add(T, row, first, "IPS_" + nm, parts[v][0]);
          detail::add(T, row, first, "IPS_src_" + nm, parts[v][1]);
          detail::add(T, row, first, "IPS_tgt_" + nm, parts[v][2]);
          detail::add(T, row, first, "IPP_" + nm, parts[v][3]);
        }
      }
      for (bool strict : strict_v) {
        for (const auto& w : opt.windows) {
          const auto sfx = std::string("_") + (strict ? "strict" : "rc") + "_" + w.label();
          const double cp = bf.cp(a, t, w, strict);
          detail::add(T, row, first, "CP" + sfx, cp);
          detail::add(T, row, first, "CD" + sfx, cp / static_cast<double>(t - t0 + 1));
          detail::add(T, row, first, "FLAT" + sfx, bf.flat(a, t, w, strict));
        }
      }
      detail::add(T, row, first, "yearoff", static_cast<double>(t - t0));
      detail::add(T, row, first, "yearoff2", static_cast<double>((t - t0) * (t - t0)));
      for (auto mode : {EntityMode::Affiliations, EntityMode::Authors}) {
        const auto [nw, nhi] = bf.attention(a, t, c.publication, mode);
        detail::add(T, row, first, std::string("NW_") + to_string(mode), nw);
        detail::add(T, row, first, std::string("NHI_") + to_string(mode), nhi);
      }
      if (opt.bipartite) {
        for (auto mode : entity_modes()) {
          for (const auto& w : opt.windows) {
            const auto b = bf.batch(a, t, w, mode);
            const auto& v = b.per.at(c.publication);
            const auto label = std::string(to_string(mode)) + "_" + w.label();
            detail::add(T, row, first, "CCN_" + label, b.ccn);
            detail::add(T, row, first, "CSI_" + label, v[1]);
            detail::add(T, row, first, "CSA_" + label, v[2]);
            detail::add(T, row, first, "CDEP_" + label, v[0]);
            detail::add(T, row, first, "BDEP_" + label, b.bdep);
          }
        }
      }
      T.rows.push_back(std::move(row));
      T.interaction.push_back(a);
      T.publication.push_back(c.publication);
      T.year.push_back(t);
    }
  }
  return out;
}

struct ReferenceComparison {
  std::size_t values = 0;
  std::size_t mismatches = 0;
  double max_abs_diff = 0.0;
  std::vector<std::string> details;
};

/// Compares every oracle column with the same column of the pipeline table.
inline void compare_to_reference(const FeatureTable& reference, const FeatureTable& pipeline, double tol,
                                 ReferenceComparison& cmp) {
  if (reference.size() != pipeline.size()) {
    ++cmp.mismatches;
    cmp.details.push_back("row count differs");
    return;
  }
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!(reference.interaction[i] == pipeline.interaction[i]) || !(reference.publication[i] == pipeline.publication[i])) {
      ++cmp.mismatches;
      cmp.details.push_back("row order differs at " + std::to_string(i));
      return;
    }
    for (std::size_t j = 0; j < reference.names.size(); ++j) {
      const double a = reference.rows[i][j], b = pipeline.rows[i][pipeline.column(reference.names[j])];
      ++cmp.values;
      const bool ok = (is_missing(a) && is_missing(b)) || (!is_missing(a) && !is_missing(b) && std::abs(a - b) <= tol);
      if (!ok) {
        ++cmp.mismatches;
        if (cmp.details.size() < 20) {
          cmp.details.push_back(reference.interaction[i].str() + " " + reference.publication[i].str() + " " +
                                reference.names[j] + ": " + text::fmt(a) + " vs " + text::fmt(b));
        }
      } else if (!is_missing(a)) {
        cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::abs(a - b));
      }
    }
  }
}

}  // namespace claimcal
