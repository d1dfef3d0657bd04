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

// Directed gene network built from claims, with degree and community features.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "claimcal/common.hpp"
#include "claimcal/community.hpp"
#include "claimcal/corpus.hpp"

namespace claimcal {

struct GeneGraph {
  int as_of = 0;
  std::set<GeneId> nodes;
  std::map<std::pair<GeneId, GeneId>, double> edges;  // claim count with year <= as_of

  bool contains(const GeneId& g) const { return nodes.contains(g); }

  /// Dense copy with nodes numbered in sorted order.
  IndexGraph index_graph(bool weighted) const {
    IndexGraph g(nodes.size());
    for (const auto& [e, w] : edges) g.add_edge(index_of(e.first), index_of(e.second), weighted ? w : 1.0);
    return g;
  }

  std::size_t index_of(const GeneId& gene) const {
    auto it = nodes.find(gene);
    if (it == nodes.end()) throw Error("gene " + gene.str() + " not in graph");
    return static_cast<std::size_t>(std::distance(nodes.begin(), it));
  }
};

/// Cumulative network: every interaction claimed in a year <= t, weighted by the
/// number of publications claiming it so far.
inline GeneGraph build_gene_graph(const ClaimCorpus& corpus, int t) {
  GeneGraph g;
  g.as_of = t;
  for (const auto& [key, rec] : corpus.interactions) {
    double w = 0;
    for (const auto& c : rec.claims) w += (c.year <= t);
    if (w == 0) continue;
    g.nodes.insert(key.source);
    g.nodes.insert(key.target);
    g.edges[{key.source, key.target}] = w;
  }
  return g;
}

struct Degree {
  std::size_t in = 0;
  std::size_t out = 0;
  friend bool operator==(const Degree&, const Degree&) = default;
};

/// Unweighted in/out degree; a self-loop counts once in each direction.
inline Degree degrees(const GeneGraph& g, const GeneId& gene) {
  if (!g.contains(gene)) throw Error("gene " + gene.str() + " not in graph");
  Degree d;
  for (const auto& [e, w] : g.edges) {
    d.out += (e.first == gene);
    d.in += (e.second == gene);
  }
  return d;
}

/// All degrees at once, for feature tables.
inline std::map<GeneId, Degree> all_degrees(const GeneGraph& g) {
  std::map<GeneId, Degree> out;
  for (const auto& n : g.nodes) out[n];
  for (const auto& [e, w] : g.edges) {
    ++out[e.first].out;
    ++out[e.second].in;
  }
  return out;
}

enum class CommunityMethod { LabelProp, Infomap };

inline const char* to_string(CommunityMethod m) { return m == CommunityMethod::Infomap ? "infomap" : "ml"; }

struct CommunityPartition {
  std::map<GeneId, int> assignment;
  CommunityMethod method = CommunityMethod::Infomap;
  bool directed = false;
  bool weighted = false;

  int community_of(const GeneId& g) const {
    auto it = assignment.find(g);
    if (it == assignment.end()) throw Error("gene " + g.str() + " has no community");
    return it->second;
  }

  std::size_t community_size(const GeneId& g) const {
    const int c = community_of(g);
    std::size_t n = 0;
    for (const auto& [k, v] : assignment) n += (v == c);
    return n;
  }

  std::size_t count() const {
    std::set<int> ids;
    for (const auto& [k, v] : assignment) ids.insert(v);
    return ids.size();
  }
};

/// Label propagation is defined on undirected graphs only; requesting a directed
/// variant is an error.
inline CommunityPartition detect_communities(const GeneGraph& g, CommunityMethod method, bool directed, bool weighted,
                                             std::uint64_t seed) {
  if (g.nodes.empty()) throw Error("community detection needs a non-empty graph");
  if (method == CommunityMethod::LabelProp && directed) throw Error("label propagation runs on undirected graphs");
  const IndexGraph ig = g.index_graph(weighted);
  const auto labels =
      method == CommunityMethod::Infomap ? infomap_partition(ig, directed, seed) : label_propagation(ig, seed);
  CommunityPartition p;
  p.method = method;
  p.directed = directed;
  p.weighted = weighted;
  std::size_t i = 0;
  for (const auto& gene : g.nodes) p.assignment[gene] = labels[i++];
  return p;
}

/// sqrt(|community(source)| * |community(target)|).
inline double interaction_partition_size(const CommunityPartition& p, const InteractionKey& a) {
  return std::sqrt(static_cast<double>(p.community_size(a.source)) *
                   static_cast<double>(p.community_size(a.target)));
}

inline bool interaction_partition_position(const CommunityPartition& p, const InteractionKey& a) {
  return p.community_of(a.source) == p.community_of(a.target);
}

struct PartitionVariant {
  CommunityMethod method;
  bool directed;
  bool weighted;

  std::string name() const {
    return std::string(to_string(method)) + (directed ? "_dir" : "_undir") + (weighted ? "_w" : "_uw");
  }
};

/// The six partition variants used as feature columns.
inline const std::array<PartitionVariant, 6>& partition_variants() {
  static const std::array<PartitionVariant, 6> v{{
      {CommunityMethod::Infomap, true, false},
      {CommunityMethod::Infomap, true, true},
      {CommunityMethod::Infomap, false, false},
      {CommunityMethod::Infomap, false, true},
      {CommunityMethod::LabelProp, false, false},
      {CommunityMethod::LabelProp, false, true},
  }};
  return v;
}

/// Community sizes per gene for one partition; cheaper than repeated lookups.
struct CommunitySizes {
  std::map<GeneId, std::size_t> size;
  std::map<GeneId, int> id;
};

inline CommunitySizes community_sizes(const CommunityPartition& p) {
  std::map<int, std::size_t> counts;
  for (const auto& [g, c] : p.assignment) ++counts[c];
  CommunitySizes out;
  for (const auto& [g, c] : p.assignment) {
    out.size[g] = counts[c];
    out.id[g] = c;
  }
  return out;
}

/// All six partitions of one graph, each variant on its own RNG stream.
inline std::vector<CommunityPartition> detect_all_variants(const GeneGraph& g, std::uint64_t seed) {
  const auto& vars = partition_variants();
  std::vector<CommunityPartition> out(vars.size());
  parallel_for(vars.size(), [&](std::size_t i) {
    out[i] = detect_communities(g, vars[i].method, vars[i].directed, vars[i].weighted,
                                derive_seed(seed, 1000 + i + 10 * static_cast<std::uint64_t>(g.as_of)));
  });
  return out;
}

}  // namespace claimcal
