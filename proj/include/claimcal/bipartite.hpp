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

// Publication/entity bipartite graphs: attention concentration (NW, NHI),
// dependency indices (CDEP, BDEP) and claim communities (CCN, CSI, CSA).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "claimcal/common.hpp"
#include "claimcal/community.hpp"
#include "claimcal/corpus.hpp"

namespace claimcal {

enum class EntityMode { Authors, Affiliations, References };

inline const char* to_string(EntityMode m) {
  switch (m) {
    case EntityMode::Authors:
      return "authors";
    case EntityMode::Affiliations:
      return "affs";
    case EntityMode::References:
      return "refs";
  }
  return "?";
}

inline const std::array<EntityMode, 3>& entity_modes() {
  static const std::array<EntityMode, 3> m{EntityMode::Authors, EntityMode::Affiliations, EntityMode::References};
  return m;
}

/// Unique entities a publication lists under a mode.
inline std::vector<std::string> entities_of(const PublicationMeta& p, EntityMode mode) {
  std::vector<std::string> out;
  switch (mode) {
    case EntityMode::Authors:
      out = p.authors;
      break;
    case EntityMode::Affiliations:
      out = p.affiliations;
      break;
    case EntityMode::References:
      for (const auto& r : p.references) out.push_back(r.str());
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct BipartiteGraph {
  std::vector<PublicationId> left;             // U, sorted
  std::vector<std::string> right;              // V, sorted
  std::vector<std::vector<std::size_t>> adj;   // U index -> sorted V indices
  EntityMode mode = EntityMode::Authors;
  Window window = Window::unbounded();

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& a : adj) e += a.size();
    return e;
  }

  std::vector<std::size_t> right_degrees() const {
    std::vector<std::size_t> d(right.size(), 0);
    for (const auto& a : adj) {
      for (auto v : a) ++d[v];
    }
    return d;
  }

  std::size_t index_of(const PublicationId& u) const {
    auto it = std::lower_bound(left.begin(), left.end(), u);
    if (it == left.end() || !(*it == u)) throw Error("publication " + u.str() + " not in batch");
    return static_cast<std::size_t>(it - left.begin());
  }
};

/// Bipartite graph from explicit publication -> entity lists.
inline BipartiteGraph make_bipartite(const std::map<PublicationId, std::vector<std::string>>& lists,
                                     EntityMode mode = EntityMode::Authors, Window window = Window::unbounded()) {
  BipartiteGraph g;
  g.mode = mode;
  g.window = window;
  std::set<std::string> v;
  for (const auto& [u, ents] : lists) {
    g.left.push_back(u);
    v.insert(ents.begin(), ents.end());
  }
  g.right.assign(v.begin(), v.end());
  for (const auto& [u, ents] : lists) {
    std::vector<std::size_t> a;
    for (const auto& e : ents) {
      a.push_back(static_cast<std::size_t>(std::lower_bound(g.right.begin(), g.right.end(), e) - g.right.begin()));
    }
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    g.adj.push_back(std::move(a));
  }
  return g;
}

/// U = publications claiming the interaction with year in (t-k, t]; V = their entities.
inline BipartiteGraph build_bipartite(const ClaimCorpus& corpus, const InteractionKey& a, int t, Window k,
                                      EntityMode mode) {
  std::map<PublicationId, std::vector<std::string>> lists;
  for (const auto& c : batch(corpus, a, t, k, false)) {
    lists[c.publication] = entities_of(corpus.publication(c.publication), mode);
  }
  if (lists.empty()) throw Error("empty batch for " + a.str() + " at " + std::to_string(t));
  return make_bipartite(lists, mode, k);
}

struct WeightLedger {
  std::map<std::string, double> weights;
  std::map<std::string, double> normalized;
  std::size_t K = 0;
  std::size_t publications = 0;
  std::size_t missing = 0;  // publications listing no entity of this mode
};

/// Each publication carries mass 1 split equally across its unique entities;
/// weights accumulate over claims strictly before t and are normalized to sum 1.
/// K counts the union of entities seen.
inline WeightLedger entity_weights(const ClaimCorpus& corpus, const InteractionKey& a, int t, EntityMode mode) {
  const auto& rec = corpus.at(a);
  WeightLedger led;
  for (const auto& c : rec.claims) {
    if (c.year >= t) continue;
    ++led.publications;
    const auto ents = entities_of(corpus.publication(c.publication), mode);
    if (ents.empty()) {
      ++led.missing;
      continue;
    }
    for (const auto& e : ents) led.weights[e] += 1.0 / static_cast<double>(ents.size());
  }
  if (led.publications == 0) throw Error("no claims on " + a.str() + " before " + std::to_string(t));
  double total = 0.0;
  for (const auto& [e, w] : led.weights) total += w;
  for (const auto& [e, w] : led.weights) led.normalized[e] = w / total;
  led.K = led.weights.size();
  return led;
}

inline WeightLedger affiliation_weights(const ClaimCorpus& corpus, const InteractionKey& a, int t) {
  return entity_weights(corpus, a, t, EntityMode::Affiliations);
}

struct Herfindahl {
  double hi = kMissing;
  double nhi = kMissing;
};

inline Herfindahl herfindahl(const std::vector<double>& f) {
  if (f.empty()) return {};
  Herfindahl h{0.0, 0.0};
  for (double x : f) h.hi += x * x;
  const double K = static_cast<double>(f.size());
  h.nhi = f.size() == 1 ? 1.0 : (h.hi - 1.0 / K) / (1.0 - 1.0 / K);
  h.nhi = std::clamp(h.nhi, 0.0, 1.0);
  return h;
}

inline Herfindahl herfindahl(const WeightLedger& led) {
  std::vector<double> f;
  for (const auto& [e, x] : led.normalized) f.push_back(x);
  return herfindahl(f);
}

/// Mean prior-attention share held by a claim's own entities; entities new to the
/// interaction contribute 0. Missing when the publication lists none.
inline double normalized_weight(const WeightLedger& led, const std::vector<std::string>& entities) {
  if (entities.empty() || led.K == 0) return kMissing;
  double s = 0.0;
  for (const auto& e : entities) {
    auto it = led.normalized.find(e);
    if (it != led.normalized.end()) s += it->second;
  }
  return s / static_cast<double>(entities.size());
}

/// Batch-level dependency: mean of d^lambda over the top ceil(f|V|) entity degrees,
/// relative to |U|^lambda.
inline double batch_dependency(const BipartiteGraph& g, double f, double lambda) {
  if (!(f > 0.0 && f <= 1.0)) throw Error("dependency fraction must lie in (0,1]");
  if (lambda < 1.0) throw Error("dependency exponent must be >= 1");
  if (g.left.empty()) throw Error("empty batch");
  if (g.right.empty()) return kMissing;
  auto d = g.right_degrees();
  std::stable_sort(d.begin(), d.end(), std::greater<>());
  const double fv = f * static_cast<double>(d.size());
  const auto k = std::min(d.size(), static_cast<std::size_t>(std::ceil(fv - 1e-9)));
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::pow(static_cast<double>(d[i]), lambda);
  return (s / static_cast<double>(k)) / std::pow(static_cast<double>(g.left.size()), lambda);
}

/// Claim-level dependency of publication u on the rest of its batch.
inline double claim_dependency(const BipartiteGraph& g, const PublicationId& u) {
  const auto i = g.index_of(u);
  if (g.left.size() < 2 || g.adj[i].empty()) return kMissing;
  const auto d = g.right_degrees();
  double s = 0.0;
  for (auto v : g.adj[i]) s += static_cast<double>(d[v] - 1);
  return s / (static_cast<double>(g.adj[i].size()) * static_cast<double>(g.left.size() - 1));
}

/// Undirected weighted graph on U; one record per unordered pair with w > 0.
struct ProjectedGraph {
  std::size_t n = 0;
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;  // (a < b, w)

  IndexGraph index_graph() const {
    IndexGraph g(n);
    for (const auto& [a, b, w] : edges) g.add_edge(a, b, w);
    return g;
  }
};

inline ProjectedGraph jaccard_projection(const BipartiteGraph& g) {
  ProjectedGraph p;
  p.n = g.left.size();
  for (std::size_t a = 0; a < p.n; ++a) {
    for (std::size_t b = a + 1; b < p.n; ++b) {
      std::vector<std::size_t> inter;
      std::set_intersection(g.adj[a].begin(), g.adj[a].end(), g.adj[b].begin(), g.adj[b].end(),
                            std::back_inserter(inter));
      if (inter.empty()) continue;
      const double uni = static_cast<double>(g.adj[a].size() + g.adj[b].size() - inter.size());
      p.edges.emplace_back(a, b, static_cast<double>(inter.size()) / uni);
    }
  }
  return p;
}

struct ClaimCommunities {
  std::size_t ccn = 0;
  std::vector<int> community;  // per U index
  std::vector<double> csi;     // community size in publications
  std::vector<double> csa;     // csi / |U|
};

inline ClaimCommunities claim_communities(const ProjectedGraph& p, std::uint64_t seed) {
  if (p.n == 0) throw Error("claim communities need a non-empty projection");
  ClaimCommunities out;
  out.community = infomap_partition(p.index_graph(), false, seed);
  std::map<int, std::size_t> size;
  for (int c : out.community) ++size[c];
  out.ccn = size.size();
  for (int c : out.community) {
    out.csi.push_back(static_cast<double>(size[c]));
    out.csa.push_back(static_cast<double>(size[c]) / static_cast<double>(p.n));
  }
  return out;
}

/// Default top fraction per mode.
inline double default_dependency_fraction(EntityMode m) { return m == EntityMode::References ? 0.2 : 0.5; }
inline constexpr double kDefaultDependencyExponent = 2.0;

}  // namespace claimcal
