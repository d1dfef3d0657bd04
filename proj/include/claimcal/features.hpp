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

// Feature tables: one row per interaction (as of a year) or per claim, with
// column families, median imputation and an as-of-time audit.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "claimcal/bipartite.hpp"
#include "claimcal/claimfeat.hpp"
#include "claimcal/common.hpp"
#include "claimcal/corpus.hpp"
#include "claimcal/learn.hpp"
#include "claimcal/netfeat.hpp"

namespace claimcal {

struct FeatureOptions {
  std::vector<Window> windows = default_windows();
  bool network = true;
  bool bipartite = true;
  bool citations = true;
  CitationFitOptions citation_fit;
  std::uint64_t seed = 7;
};

inline const std::vector<std::string>& citation_feature_names() {
  static const std::vector<std::string> v{"cit3",      "cit_mu",        "cit_sigma", "cit_A",
                                          "cit_log_mu", "cit_log_sigma", "cit_log_A", "cit_fit_ok"};
  return v;
}

/// Family of a feature column; missingness indicators inherit the family of their column.
inline std::string feature_family(const std::string& name) {
  constexpr std::string_view suffix = "_missing";
  if (name.size() > suffix.size() && name.ends_with(suffix)) {
    return feature_family(name.substr(0, name.size() - suffix.size()));
  }
  static const std::map<std::string, std::string> exact{
      {"MCP", "MCP"},       {"AMMCP", "AMMCP"},          {"n_affs", "affiliation count"},
      {"n_authors", "author count"}, {"JQ", "JQ"},       {"AR", "AR"},
      {"dyear", "dyear"},   {"yearoff", "time"},         {"yearoff2", "time"}};
  if (auto it = exact.find(name); it != exact.end()) return it->second;
  for (const auto& c : citation_feature_names()) {
    if (name == c) return "citations";
  }
  static const std::vector<std::pair<std::string, std::string>> prefix{
      {"CP_", "CP/CD"},  {"CD_", "CP/CD"}, {"FLAT_", "FLAT"}, {"deg_", "degrees"}, {"IPS_", "IPS"},
      {"IPP_", "IPP"},   {"NW_", "NW"},    {"NHI_", "NHI"},   {"CCN_", "CCN"},     {"CSI_", "CSI"},
      {"CSA_", "CSA"},   {"CDEP_", "CDEP"}, {"BDEP_", "BDEP"}};
  for (const auto& [p, fam] : prefix) {
    if (name.starts_with(p)) return fam;
  }
  throw Error("no family for feature " + name);
}

inline FamilyMap feature_families(const std::vector<std::string>& names) {
  FamilyMap m;
  for (const auto& n : names) m[n] = feature_family(n);
  return m;
}

/// Raw feature rows; NaN marks a missing value.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<InteractionKey> interaction;
  std::vector<PublicationId> publication;  // empty id for interaction rows
  std::vector<int> year;                   // as-of year of the row

  std::size_t size() const { return rows.size(); }

  std::size_t column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("unknown feature " + name);
    return static_cast<std::size_t>(it - names.begin());
  }

  FeatureMatrix matrix() const { return FeatureMatrix{names, rows}; }

  FeatureTable subset(const std::vector<std::size_t>& idx) const {
    FeatureTable t;
    t.names = names;
    for (auto i : idx) {
      t.rows.push_back(rows.at(i));
      t.interaction.push_back(interaction.at(i));
      t.publication.push_back(publication.at(i));
      t.year.push_back(year.at(i));
    }
    return t;
  }

  /// Drops columns whose family is in `families`.
  FeatureTable without_families(const std::set<std::string>& families) const {
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (!families.contains(feature_family(names[j]))) keep.push_back(j);
    }
    FeatureTable t = *this;
    t.names.clear();
    for (auto j : keep) t.names.push_back(names[j]);
    for (auto& r : t.rows) {
      std::vector<double> nr;
      for (auto j : keep) nr.push_back(r[j]);
      r = std::move(nr);
    }
    return t;
  }
};

/// Per-publication quantities shared by interaction and claim rows.
struct PublicationFeatures {
  double n_affs = kMissing, n_authors = kMissing, jq = kMissing, ar = kMissing;
  std::vector<double> citations;  // aligned with citation_feature_names()
};

inline PublicationFeatures publication_features(const PublicationMeta& p, const CitationFitOptions& fit_opt,
                                                bool citations) {
  PublicationFeatures f;
  f.n_affs = static_cast<double>(entities_of(p, EntityMode::Affiliations).size());
  f.n_authors = static_cast<double>(entities_of(p, EntityMode::Authors).size());
  if (p.journal_score) f.jq = *p.journal_score;
  if (p.top_affiliation) f.ar = *p.top_affiliation ? 1.0 : 0.0;
  f.citations.assign(citation_feature_names().size(), kMissing);
  if (citations && !p.citation_history.empty()) {
    CitationFitOptions o = fit_opt;
    o.seed = derive_seed(fit_opt.seed, hash_string(p.id.str()));
    const auto fit = fit_citation_lognormal(p.citation_history, p.year, o);
    f.citations = {citations_first_years(p, 3),
                   fit.mu,
                   fit.sigma,
                   fit.amplitude,
                   fit.mu > 0.0 ? std::log(fit.mu) : kMissing,
                   std::log(fit.sigma),
                   fit.amplitude > 0.0 ? std::log(fit.amplitude) : kMissing,
                   fit.success ? 1.0 : 0.0};
  }
  return f;
}

using PublicationCache = std::map<PublicationId, PublicationFeatures>;

/// Publication features for `ids` (all publications when empty).
inline PublicationCache publication_cache(const ClaimCorpus& corpus, const FeatureOptions& opt,
                                          std::vector<PublicationId> ids = {}) {
  if (ids.empty()) {
    for (const auto& [id, p] : corpus.publications) ids.push_back(id);
  }
  std::vector<PublicationFeatures> pf(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    pf[i] = publication_features(corpus.publication(ids[i]), opt.citation_fit, opt.citations);
  });
  PublicationCache out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = std::move(pf[i]);
  return out;
}

/// Corpus-wide caches keyed by year: gene network degrees and partitions, and the
/// mean-claim percentile reference set. Everything for year t uses claims dated <= t.
class FeatureContext {
 public:
  /// `cache`, when given, supplies precomputed publication features (e.g. shared
  /// across subsamples of one corpus); missing entries are computed here.
  FeatureContext(const ClaimCorpus& corpus, FeatureOptions opt, const PublicationCache* cache = nullptr)
      : corpus_(corpus), opt_(std::move(opt)) {
    std::set<int> years;
    for (const auto& [k, rec] : corpus_.interactions) {
      for (const auto& c : rec.claims) years.insert(c.year);
    }
    years_.assign(years.begin(), years.end());
    by_year_.resize(years_.size());
    parallel_for(years_.size(), [&](std::size_t i) { by_year_[i] = build_year(years_[i]); });

    std::vector<PublicationId> ids;
    for (const auto& [id, p] : corpus_.publications) {
      if (cache) {
        if (auto it = cache->find(id); it != cache->end()) {
          pubs_[id] = it->second;
          continue;
        }
      }
      ids.push_back(id);
    }
    if (!ids.empty()) {
      auto fresh = publication_cache(corpus_, opt_, ids);
      pubs_.merge(fresh);
    }
  }

  const ClaimCorpus& corpus() const { return corpus_; }
  const FeatureOptions& options() const { return opt_; }

  struct YearCache {
    std::map<GeneId, Degree> degrees;
    std::vector<CommunitySizes> partitions;  // aligned with partition_variants()
    std::map<InteractionKey, double> means;  // mean claim over claims dated <= t
    std::vector<double> sorted_means;
  };

  const YearCache& year(int t) const {
    auto it = std::lower_bound(years_.begin(), years_.end(), t);
    if (it == years_.end() || *it != t) throw Error("no claims dated " + std::to_string(t));
    return by_year_[static_cast<std::size_t>(it - years_.begin())];
  }

  const PublicationFeatures& publication(const PublicationId& id) const {
    auto it = pubs_.find(id);
    if (it == pubs_.end()) throw Error("unknown publication " + id.str());
    return it->second;
  }

 private:
  YearCache build_year(int t) const {
    YearCache yc;
    if (opt_.network) {
      const auto g = build_gene_graph(corpus_, t);
      yc.degrees = all_degrees(g);
      for (const auto& p : detect_all_variants(g, opt_.seed)) yc.partitions.push_back(community_sizes(p));
    }
    for (const auto& [k, rec] : corpus_.interactions) {
      double s = 0.0, n = 0.0;
      for (const auto& c : rec.claims) {
        if (c.year > t) continue;
        s += c.polarity;
        n += 1.0;
      }
      if (n > 0) yc.means[k] = s / n;
    }
    for (const auto& [k, m] : yc.means) yc.sorted_means.push_back(m);
    std::sort(yc.sorted_means.begin(), yc.sorted_means.end());
    return yc;
  }

  const ClaimCorpus& corpus_;
  FeatureOptions opt_;
  std::vector<int> years_;
  std::vector<YearCache> by_year_;
  std::map<PublicationId, PublicationFeatures> pubs_;
};

namespace detail {

inline void push(std::vector<std::string>* names, std::vector<double>& row, const std::string& name, double v) {
  if (names) names->push_back(name);
  row.push_back(v);
}

inline void network_columns(const FeatureContext& ctx, const InteractionKey& a, int t,
                            std::vector<std::string>* names, std::vector<double>& row) {
  const auto& yc = ctx.year(t);
  const auto& vars = partition_variants();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& p = yc.partitions[i];
    const double ss = static_cast<double>(p.size.at(a.source)), st = static_cast<double>(p.size.at(a.target));
    const auto nm = vars[i].name();
    push(names, row, "IPS_" + nm, std::sqrt(ss * st));
    push(names, row, "IPS_src_" + nm, ss);
    push(names, row, "IPS_tgt_" + nm, st);
    push(names, row, "IPP_" + nm, p.id.at(a.source) == p.id.at(a.target) ? 1.0 : 0.0);
  }
}

inline void degree_columns(const FeatureContext& ctx, const InteractionKey& a, int t, std::vector<std::string>* names,
                           std::vector<double>& row) {
  const auto& d = ctx.year(t).degrees;
  const auto& s = d.at(a.source);
  const auto& g = d.at(a.target);
  push(names, row, "deg_src_in", static_cast<double>(s.in));
  push(names, row, "deg_src_out", static_cast<double>(s.out));
  push(names, row, "deg_tgt_in", static_cast<double>(g.in));
  push(names, row, "deg_tgt_out", static_cast<double>(g.out));
}

inline void temporal_columns(const FeatureContext& ctx, const InteractionKey& a, int t, std::vector<std::string>* names,
                             std::vector<double>& row) {
  for (auto v : {Variant::Strict, Variant::RightContinuous}) {
    for (const auto& w : ctx.options().windows) {
      const auto sfx = std::string("_") + to_string(v) + "_" + w.label();
      push(names, row, "CP" + sfx, static_cast<double>(claim_popularity(ctx.corpus(), a, t, w, v)));
      push(names, row, "CD" + sfx, claim_density(ctx.corpus(), a, t, w, v));
      push(names, row, "FLAT" + sfx, flatness(ctx.corpus(), a, t, w, v));
    }
  }
}

inline void publication_columns(const PublicationFeatures& f, std::vector<std::string>* names,
                                std::vector<double>& row) {
  push(names, row, "n_affs", f.n_affs);
  push(names, row, "n_authors", f.n_authors);
  push(names, row, "JQ", f.jq);
  push(names, row, "AR", f.ar);
  for (std::size_t i = 0; i < f.citations.size(); ++i) push(names, row, citation_feature_names()[i], f.citations[i]);
}

inline double nan_mean(const std::vector<double>& v) {
  double s = 0.0, n = 0.0;
  for (double x : v) {
    if (is_missing(x)) continue;
    s += x;
    n += 1.0;
  }
  return n > 0 ? s / n : kMissing;
}

inline std::uint64_t batch_seed(std::uint64_t seed, const InteractionKey& a, int t, EntityMode m, const Window& w) {
  return derive_seed(seed, hash_string(a.str() + "|" + std::to_string(t) + "|" + to_string(m) + "|" + w.label()));
}

}  // namespace detail

/// Bipartite quantities of one batch (t-w, t]: per-publication CDEP, CSI, CSA and
/// batch-level BDEP and CCN.
struct BatchStats {
  double bdep = kMissing;
  double ccn = kMissing;
  std::map<PublicationId, double> cdep, csi, csa;
};

inline BatchStats batch_stats(const ClaimCorpus& corpus, const InteractionKey& a, int t, const Window& w,
                              EntityMode mode, std::uint64_t seed) {
  BatchStats out;
  const auto g = build_bipartite(corpus, a, t, w, mode);
  out.bdep = batch_dependency(g, default_dependency_fraction(mode), kDefaultDependencyExponent);
  for (const auto& u : g.left) out.cdep[u] = claim_dependency(g, u);
  const auto cc = claim_communities(jaccard_projection(g), detail::batch_seed(seed, a, t, mode, w));
  out.ccn = static_cast<double>(cc.ccn);
  for (std::size_t i = 0; i < g.left.size(); ++i) {
    out.csi[g.left[i]] = cc.csi[i];
    out.csa[g.left[i]] = cc.csa[i];
  }
  return out;
}

/// Number of claim communities in the batch (t-w, t] of an interaction.
inline double batch_community_count(const ClaimCorpus& corpus, const InteractionKey& a, int t, const Window& w,
                                    EntityMode mode, std::uint64_t seed) {
  return batch_stats(corpus, a, t, w, mode, seed).ccn;
}

inline int last_claim_year(const InteractionRecord& rec) {
  if (rec.claims.empty()) throw Error("no claims for " + rec.key.str());
  int t = rec.claims.front().year;
  for (const auto& c : rec.claims) t = std::max(t, c.year);
  return t;
}

/// Interaction-level row as of year t: mean-claim percentile, degrees, partitions,
/// history length, popularity/density/flatness, publication averages and mean CDEP.
inline std::vector<double> interaction_row(const FeatureContext& ctx, const InteractionKey& a, int t,
                                           std::vector<std::string>* names = nullptr) {
  const auto& corpus = ctx.corpus();
  const auto& rec = corpus.at(a);
  std::vector<double> row;
  const auto& yc = ctx.year(t);
  auto mit = yc.means.find(a);
  if (mit == yc.means.end()) throw Error("no claims on " + a.str() + " by " + std::to_string(t));
  const PercentileIndex pct(yc.sorted_means);
  const auto cp = pct(mit->second);
  detail::push(names, row, "MCP", cp.mcp);
  detail::push(names, row, "AMMCP", cp.ammcp);
  if (ctx.options().network) {
    detail::degree_columns(ctx, a, t, names, row);
    detail::network_columns(ctx, a, t, names, row);
  }
  int lo = t, hi = std::numeric_limits<int>::min();
  std::vector<const PublicationFeatures*> pubs;
  for (const auto& c : rec.claims) {
    if (c.year > t) continue;
    lo = std::min(lo, c.year);
    hi = std::max(hi, c.year);
    pubs.push_back(&ctx.publication(c.publication));
  }
  detail::push(names, row, "dyear", static_cast<double>(hi - lo));
  detail::temporal_columns(ctx, a, t, names, row);

  PublicationFeatures avg;
  auto collect = [&](auto get) {
    std::vector<double> v;
    for (auto* p : pubs) v.push_back(get(*p));
    return detail::nan_mean(v);
  };
  avg.n_affs = collect([](const auto& p) { return p.n_affs; });
  avg.n_authors = collect([](const auto& p) { return p.n_authors; });
  avg.jq = collect([](const auto& p) { return p.jq; });
  avg.ar = collect([](const auto& p) { return p.ar; });
  for (std::size_t i = 0; i < citation_feature_names().size(); ++i) {
    avg.citations.push_back(collect([i](const auto& p) { return p.citations[i]; }));
  }
  detail::publication_columns(avg, names, row);

  if (ctx.options().bipartite) {
    for (auto mode : entity_modes()) {
      for (const auto& w : ctx.options().windows) {
        const auto bs = batch_stats(corpus, a, t, w, mode, ctx.options().seed);
        std::vector<double> v;
        for (const auto& [u, x] : bs.cdep) v.push_back(x);
        detail::push(names, row, std::string("CDEP_") + to_string(mode) + "_" + w.label(), detail::nan_mean(v));
      }
    }
  }
  return row;
}

/// One row per interaction, dated at `as_of[key]` when given, else at its last claim year.
inline FeatureTable interaction_features(const FeatureContext& ctx, const std::vector<InteractionKey>& keys,
                                         const std::map<InteractionKey, int>& as_of = {}) {
  FeatureTable tab;
  tab.rows.resize(keys.size());
  tab.year.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto it = as_of.find(keys[i]);
    tab.year[i] = it != as_of.end() ? it->second : last_claim_year(ctx.corpus().at(keys[i]));
  }
  if (!keys.empty()) tab.rows[0] = interaction_row(ctx, keys[0], tab.year[0], &tab.names);
  parallel_for(keys.size(), [&](std::size_t i) {
    if (i > 0) tab.rows[i] = interaction_row(ctx, keys[i], tab.year[i]);
  });
  tab.interaction = keys;
  tab.publication.assign(keys.size(), PublicationId());
  return tab;
}

/// Rows for every claim on `a` dated t, sharing one batch computation per window and mode.
inline std::vector<std::vector<double>> claim_rows_at(const FeatureContext& ctx, const InteractionKey& a, int t,
                                                      const std::vector<PublicationId>& pubs,
                                                      std::vector<std::string>* names = nullptr) {
  const auto& corpus = ctx.corpus();
  const auto& opt = ctx.options();
  const int t0 = first_claim_year(corpus.at(a));

  std::vector<double> shared;
  std::vector<std::string> shared_names;
  auto* sn = names ? &shared_names : nullptr;
  if (opt.network) detail::network_columns(ctx, a, t, sn, shared);
  detail::temporal_columns(ctx, a, t, sn, shared);
  detail::push(sn, shared, "yearoff", static_cast<double>(t - t0));
  detail::push(sn, shared, "yearoff2", static_cast<double>((t - t0) * (t - t0)));

  // Attention ledgers over claims strictly before t.
  std::map<EntityMode, WeightLedger> ledgers;
  for (auto mode : {EntityMode::Affiliations, EntityMode::Authors}) {
    try {
      ledgers[mode] = entity_weights(corpus, a, t, mode);
    } catch (const Error&) {
      // no earlier claims: NW and NHI stay missing
    }
  }
  std::vector<std::pair<std::string, BatchStats>> batches;
  if (opt.bipartite) {
    for (auto mode : entity_modes()) {
      for (const auto& w : opt.windows) {
        batches.emplace_back(std::string(to_string(mode)) + "_" + w.label(), batch_stats(corpus, a, t, w, mode, opt.seed));
      }
    }
  }

  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < pubs.size(); ++k) {
    const auto& u = pubs[k];
    std::vector<double> row = shared;
    auto* nm = (names && k == 0) ? names : nullptr;
    if (nm) *nm = shared_names;
    for (auto mode : {EntityMode::Affiliations, EntityMode::Authors}) {
      const auto sfx = std::string("_") + to_string(mode);
      auto it = ledgers.find(mode);
      double nw = kMissing, nhi = kMissing;
      if (it != ledgers.end()) {
        nw = normalized_weight(it->second, entities_of(corpus.publication(u), mode));
        if (it->second.K > 0) nhi = herfindahl(it->second).nhi;
      }
      detail::push(nm, row, "NW" + sfx, nw);
      detail::push(nm, row, "NHI" + sfx, nhi);
    }
    for (const auto& [label, bs] : batches) {
      detail::push(nm, row, "CCN_" + label, bs.ccn);
      detail::push(nm, row, "CSI_" + label, bs.csi.at(u));
      detail::push(nm, row, "CSA_" + label, bs.csa.at(u));
      detail::push(nm, row, "CDEP_" + label, bs.cdep.at(u));
      detail::push(nm, row, "BDEP_" + label, bs.bdep);
    }
    detail::publication_columns(ctx.publication(u), nm, row);
    out.push_back(std::move(row));
  }
  return out;
}

/// One row per claim on the given interactions, dated at the claim's year.
inline FeatureTable claim_features(const FeatureContext& ctx, const std::vector<InteractionKey>& keys) {
  struct Group {
    InteractionKey key;
    int year;
    std::vector<PublicationId> pubs;
  };
  std::vector<Group> groups;
  for (const auto& k : keys) {
    for (const auto& c : ctx.corpus().at(k).claims) {
      if (groups.empty() || !(groups.back().key == k) || groups.back().year != c.year) groups.push_back({k, c.year, {}});
      groups.back().pubs.push_back(c.publication);
    }
  }
  std::vector<std::vector<std::vector<double>>> rows(groups.size());
  FeatureTable tab;
  if (!groups.empty()) rows[0] = claim_rows_at(ctx, groups[0].key, groups[0].year, groups[0].pubs, &tab.names);
  parallel_for(groups.size(), [&](std::size_t i) {
    if (i > 0) rows[i] = claim_rows_at(ctx, groups[i].key, groups[i].year, groups[i].pubs);
  });
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t k = 0; k < groups[i].pubs.size(); ++k) {
      tab.rows.push_back(std::move(rows[i][k]));
      tab.interaction.push_back(groups[i].key);
      tab.publication.push_back(groups[i].pubs[k]);
      tab.year.push_back(groups[i].year);
    }
  }
  return tab;
}

// Imputation ------------------------------------------------------------------------

/// Median imputation with missingness indicators, fit on training rows only.
struct Imputer {
  std::vector<std::string> names;
  std::vector<double> medians;
  std::vector<bool> indicator;

  static Imputer fit(const FeatureMatrix& raw) {
    Imputer imp;
    imp.names = raw.names;
    for (std::size_t j = 0; j < raw.p(); ++j) {
      std::vector<double> v;
      for (const auto& r : raw.rows) {
        if (!is_missing(r[j])) v.push_back(r[j]);
      }
      imp.medians.push_back(v.empty() ? 0.0 : stats::median(v));
      imp.indicator.push_back(v.size() < raw.n());
    }
    return imp;
  }

  FeatureMatrix apply(const FeatureMatrix& raw) const {
    if (raw.names != names) throw Error("imputer applied to a different column set");
    FeatureMatrix out;
    out.names = names;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (indicator[j]) out.names.push_back(names[j] + "_missing");
    }
    for (const auto& r : raw.rows) {
      std::vector<double> row(r.size());
      std::vector<double> ind;
      for (std::size_t j = 0; j < r.size(); ++j) {
        const bool miss = is_missing(r[j]);
        row[j] = miss ? medians[j] : r[j];
        if (indicator[j]) ind.push_back(miss ? 1.0 : 0.0);
      }
      row.insert(row.end(), ind.begin(), ind.end());
      out.rows.push_back(std::move(row));
    }
    return out;
  }
};

// As-of audit -----------------------------------------------------------------------

/// Corpus restricted to claims dated <= t (publications of dropped claims removed).
inline ClaimCorpus truncate_corpus(const ClaimCorpus& corpus, int t) {
  ClaimCorpus out;
  for (const auto& [k, rec] : corpus.interactions) {
    InteractionRecord r;
    r.key = k;
    r.strength = rec.strength;
    for (const auto& c : rec.claims) {
      if (c.year > t) continue;
      r.claims.push_back(c);
      out.publications[c.publication] = corpus.publication(c.publication);
    }
    if (!r.claims.empty()) out.interactions[k] = std::move(r);
  }
  return out;
}

struct AuditResult {
  std::size_t rows_checked = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> details;
};

inline bool same_value(double a, double b) { return (is_missing(a) && is_missing(b)) || a == b; }

/// Recomputes claim rows dated t on the corpus truncated at t and compares them
/// with `table`. Citation columns are excluded: they summarise each publication's
/// full citation record by design.
inline AuditResult audit_claim_rows(const ClaimCorpus& corpus, const FeatureTable& table, const FeatureOptions& opt,
                                    const std::vector<int>& years) {
  AuditResult res;
  for (int t : years) {
    const auto cut = truncate_corpus(corpus, t);
    const FeatureContext ctx(cut, opt);
    std::vector<InteractionKey> keys;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table.year[i] == t && cut.interactions.contains(table.interaction[i])) keys.push_back(table.interaction[i]);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    const auto fresh = claim_features(ctx, keys);
    std::map<std::pair<InteractionKey, PublicationId>, std::size_t> at;
    for (std::size_t i = 0; i < fresh.size(); ++i) at[{fresh.interaction[i], fresh.publication[i]}] = i;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table.year[i] != t) continue;
      auto it = at.find({table.interaction[i], table.publication[i]});
      ++res.rows_checked;
      if (it == at.end()) {
        ++res.mismatches;
        continue;
      }
      for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (feature_family(table.names[j]) == "citations") continue;
        const double v = fresh.rows[it->second][fresh.column(table.names[j])];
        if (!same_value(v, table.rows[i][j])) {
          ++res.mismatches;
          res.details.push_back(table.interaction[i].str() + " " + table.publication[i].str() + " " + table.names[j]);
          break;
        }
      }
    }
  }
  return res;
}

// TSV persistence -------------------------------------------------------------------

inline void write_feature_table(std::ostream& out, const FeatureTable& t) {
  out << "source\ttarget\tpublication\tyear";
  for (const auto& n : t.names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.interaction[i].source.str() << '\t' << t.interaction[i].target.str() << '\t'
        << (t.publication[i].str().empty() ? "-" : t.publication[i].str()) << '\t' << t.year[i];
    for (double v : t.rows[i]) out << '\t' << (is_missing(v) ? std::string("NA") : text::fmt(v));
    out << '\n';
  }
}

inline FeatureTable read_feature_table(std::istream& in, const std::string& source = "features") {
  FeatureTable t;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 0, "empty feature table");
  ++lineno;
  auto head = text::split_fields(line);
  if (head.size() < 4 || head[0] != "source") throw ParseError(source, lineno, "bad feature table header");
  t.names.assign(head.begin() + 4, head.end());
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split_fields(line);
    if (f.size() != head.size()) throw ParseError(source, lineno, "expected " + std::to_string(head.size()) + " fields");
    t.interaction.push_back({GeneId(f[0]), GeneId(f[1])});
    t.publication.push_back(f[2] == "-" ? PublicationId() : PublicationId(f[2]));
    auto y = text::parse_int(f[3]);
    if (!y) throw ParseError(source, lineno, "bad year");
    t.year.push_back(static_cast<int>(*y));
    std::vector<double> row;
    for (std::size_t j = 4; j < f.size(); ++j) {
      if (f[j] == "NA") {
        row.push_back(kMissing);
        continue;
      }
      auto v = text::parse_double(f[j]);
      if (!v) throw ParseError(source, lineno, "bad value in column " + head[j]);
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace claimcal
