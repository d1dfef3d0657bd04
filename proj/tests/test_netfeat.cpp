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

#include "claimcal/netfeat.hpp"
#include "claimcal/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace claimcal {
namespace {

using testing::CorpusBuilder;
using testing::key;

GeneGraph graph_of(const std::vector<std::pair<std::string, std::string>>& edges, int year = 2000) {
  CorpusBuilder b;
  int pub = 0;
  for (const auto& [s, t] : edges) b.claim(s, t, "p" + std::to_string(pub++), year, 1);
  return build_gene_graph(b.build(), year);
}

TEST(BuildGeneGraph, Examples) {
  auto c = CorpusBuilder()
               .claim("A", "B", "p1", 1999, 1)
               .claim("A", "B", "p2", 2001, 1)
               .claim("C", "D", "p3", 2001, 0)
               .claim("C", "D", "p4", 2001, 1)
               .build();
  const auto g2000 = build_gene_graph(c, 2000);
  EXPECT_EQ(g2000.edges.at({GeneId("A"), GeneId("B")}), 1.0);
  EXPECT_FALSE(g2000.contains(GeneId("C")));
  const auto g2001 = build_gene_graph(c, 2001);
  EXPECT_EQ(g2001.edges.at({GeneId("C"), GeneId("D")}), 2.0);
  EXPECT_EQ(g2001.edges.at({GeneId("A"), GeneId("B")}), 2.0);
  const auto early = build_gene_graph(c, 1990);
  EXPECT_TRUE(early.nodes.empty());
  EXPECT_TRUE(early.edges.empty());
}

TEST(BuildGeneGraph, MonotoneInTime) {
  GenConfig cfg;
  cfg.n_interactions = 300;
  cfg.n_genes = 150;
  cfg.seed = 4;
  const auto c = generate_corpus(cfg).corpus;
  GeneGraph prev = build_gene_graph(c, 1985);
  for (int t = 1986; t <= 2012; ++t) {
    const auto g = build_gene_graph(c, t);
    for (const auto& n : prev.nodes) EXPECT_TRUE(g.contains(n));
    for (const auto& [e, w] : prev.edges) EXPECT_GE(g.edges.at(e), w);
    for (const auto& [e, w] : g.edges) {
      EXPECT_GE(w, 1.0);
      EXPECT_TRUE(g.contains(e.first) && g.contains(e.second));
    }
    prev = g;
  }
}

TEST(Degrees, Examples) {
  const auto g = graph_of({{"A", "B"}, {"A", "C"}, {"B", "A"}});
  EXPECT_EQ(degrees(g, GeneId("A")), (Degree{1, 2}));
  EXPECT_EQ(degrees(g, GeneId("C")), (Degree{1, 0}));
  EXPECT_THROW(degrees(g, GeneId("Z")), Error);

  const auto loop = graph_of({{"A", "A"}, {"A", "B"}});
  EXPECT_EQ(degrees(loop, GeneId("A")), (Degree{1, 2}));

  GeneGraph iso;
  iso.nodes.insert(GeneId("X"));
  EXPECT_EQ(degrees(iso, GeneId("X")), (Degree{0, 0}));
}

TEST(Degrees, AllDegreesMatchesEnumeration) {
  GenConfig cfg;
  cfg.n_interactions = 200;
  cfg.n_genes = 60;
  cfg.seed = 8;
  const auto g = build_gene_graph(generate_corpus(cfg).corpus, 2010);
  const auto all = all_degrees(g);
  for (const auto& n : g.nodes) {
    std::set<GeneId> srcs, tgts;
    for (const auto& [e, w] : g.edges) {
      if (e.second == n) srcs.insert(e.first);
      if (e.first == n) tgts.insert(e.second);
    }
    EXPECT_EQ(all.at(n), (Degree{srcs.size(), tgts.size()}));
  }
}

std::vector<std::pair<std::string, std::string>> clique(const std::string& prefix, int n) {
  std::vector<std::pair<std::string, std::string>> e;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) e.emplace_back(prefix + std::to_string(i), prefix + std::to_string(j));
  }
  return e;
}

std::vector<std::pair<std::string, std::string>> barbell() {
  auto e = clique("L", 5);
  const auto r = clique("R", 5);
  e.insert(e.end(), r.begin(), r.end());
  e.emplace_back("L4", "R0");
  return e;
}

std::set<std::set<std::string>> groups(const CommunityPartition& p) {
  std::map<int, std::set<std::string>> m;
  for (const auto& [g, c] : p.assignment) m[c].insert(g.str());
  std::set<std::set<std::string>> out;
  for (auto& [c, s] : m) out.insert(s);
  return out;
}

std::set<std::string> names(const std::string& prefix, int n) {
  std::set<std::string> s;
  for (int i = 0; i < n; ++i) s.insert(prefix + std::to_string(i));
  return s;
}

TEST(DetectCommunities, TwoDisjointCliques) {
  auto e = clique("A", 4);
  const auto f = clique("B", 4);
  e.insert(e.end(), f.begin(), f.end());
  const auto g = graph_of(e);
  for (const auto& v : partition_variants()) {
    const auto p = detect_communities(g, v.method, v.directed, v.weighted, 11);
    EXPECT_EQ(groups(p), (std::set<std::set<std::string>>{names("A", 4), names("B", 4)})) << v.name();
  }
}

TEST(DetectCommunities, CompleteGraphIsOneCommunity) {
  const auto g = graph_of(clique("K", 5));
  for (bool weighted : {false, true}) {
    EXPECT_EQ(detect_communities(g, CommunityMethod::Infomap, false, weighted, 1).count(), 1u);
    EXPECT_EQ(detect_communities(g, CommunityMethod::LabelProp, false, weighted, 1).count(), 1u);
  }
}

TEST(DetectCommunities, BarbellMatchesExhaustiveMapEquation) {
  const auto g = graph_of(barbell());
  // Exhaustive minimum over all 115975 partitions of the ten nodes.
  std::vector<std::tuple<int, int, double>> edges;
  for (const auto& [e, w] : g.edges) {
    edges.emplace_back(static_cast<int>(g.index_of(e.first)), static_cast<int>(g.index_of(e.second)), 1.0);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> argmin;
  std::size_t visited = 0;
  oracle::for_each_partition(g.nodes.size(), [&](const std::vector<int>& m) {
    ++visited;
    const double l = oracle::undirected_map_equation(g.nodes.size(), edges, m);
    if (l < best - 1e-12) {
      best = l;
      argmin = m;
    }
  });
  ASSERT_EQ(visited, 115975u);
  std::map<int, std::set<std::string>> oracle_groups;
  std::size_t i = 0;
  for (const auto& n : g.nodes) oracle_groups[argmin[i++]].insert(n.str());
  const std::set<std::set<std::string>> expected{names("L", 5), names("R", 5)};
  ASSERT_EQ(oracle_groups.size(), 2u);
  EXPECT_EQ((std::set<std::set<std::string>>{oracle_groups[0], oracle_groups[1]}), expected);

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto im = detect_communities(g, CommunityMethod::Infomap, false, false, seed);
    EXPECT_EQ(groups(im), expected);
    std::vector<int> labels;
    for (const auto& n : g.nodes) labels.push_back(im.community_of(n));
    const double ours = map_equation(make_flow(g.index_graph(false).symmetrized(), false), labels);
    EXPECT_NEAR(ours, best, 1e-12);
    EXPECT_EQ(groups(detect_communities(g, CommunityMethod::LabelProp, false, false, seed)), expected);
  }
}

TEST(DetectCommunities, DeterministicGivenSeed) {
  GenConfig cfg;
  cfg.n_interactions = 400;
  cfg.n_genes = 200;
  cfg.seed = 2;
  const auto g = build_gene_graph(generate_corpus(cfg).corpus, 2012);
  for (const auto& v : partition_variants()) {
    EXPECT_EQ(detect_communities(g, v.method, v.directed, v.weighted, 5).assignment,
              detect_communities(g, v.method, v.directed, v.weighted, 5).assignment)
        << v.name();
  }
  EXPECT_THROW(detect_communities(g, CommunityMethod::LabelProp, true, false, 1), Error);
  EXPECT_THROW(detect_communities(GeneGraph{}, CommunityMethod::Infomap, false, false, 1), Error);
}

TEST(DetectCommunities, NeverMergesComponents) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    // Random sparse graph over three labelled blocks with no cross-block edges.
    std::vector<std::pair<std::string, std::string>> e;
    for (int block = 0; block < 3; ++block) {
      const std::string pre = std::string(1, static_cast<char>('A' + block));
      const int n = 3 + static_cast<int>(uniform_index(rng, 8));
      for (int i = 1; i < n; ++i) e.emplace_back(pre + std::to_string(uniform_index(rng, i)), pre + std::to_string(i));
      for (int k = 0; k < n; ++k) {
        e.emplace_back(pre + std::to_string(uniform_index(rng, n)), pre + std::to_string(uniform_index(rng, n)));
      }
    }
    const auto g = graph_of(e);
    for (const auto& v : partition_variants()) {
      const auto p = detect_communities(g, v.method, v.directed, v.weighted, 100 + trial);
      EXPECT_EQ(p.assignment.size(), g.nodes.size());
      for (const auto& [gene, c] : p.assignment) {
        for (const auto& [other, d] : p.assignment) {
          if (c == d) {
            EXPECT_EQ(gene.str()[0], other.str()[0]) << v.name();
          }
        }
      }
    }
  }
}

CommunityPartition manual(std::initializer_list<std::pair<const char*, int>> a) {
  CommunityPartition p;
  for (const auto& [g, c] : a) p.assignment[GeneId(g)] = c;
  return p;
}

TEST(InteractionPartition, SizeAndPosition) {
  CommunityPartition p;
  for (int i = 0; i < 4; ++i) p.assignment[GeneId("S" + std::to_string(i))] = 0;
  for (int i = 0; i < 9; ++i) p.assignment[GeneId("T" + std::to_string(i))] = 1;
  EXPECT_DOUBLE_EQ(interaction_partition_size(p, key("S0", "T3")), 6.0);
  EXPECT_FALSE(interaction_partition_position(p, key("S0", "T3")));
  EXPECT_TRUE(interaction_partition_position(p, key("S0", "S1")));
  EXPECT_TRUE(interaction_partition_position(p, key("S2", "S2")));

  const auto five = manual({{"A", 0}, {"B", 0}, {"C", 0}, {"D", 0}, {"E", 0}, {"X", 1}, {"Y", 2}});
  EXPECT_DOUBLE_EQ(interaction_partition_size(five, key("A", "B")), 5.0);
  EXPECT_DOUBLE_EQ(interaction_partition_size(five, key("X", "Y")), 1.0);
  EXPECT_THROW(interaction_partition_size(five, key("A", "Q")), Error);
  EXPECT_THROW(interaction_partition_position(five, key("Q", "A")), Error);
}

TEST(InteractionPartition, SizeIsRootOfIntegerProduct) {
  GenConfig cfg;
  cfg.n_interactions = 300;
  cfg.n_genes = 120;
  cfg.seed = 13;
  const auto c = generate_corpus(cfg).corpus;
  const auto g = build_gene_graph(c, 2012);
  for (const auto& p : detect_all_variants(g, 3)) {
    for (const auto& [k, rec] : c.interactions) {
      if (!g.contains(k.source) || !g.contains(k.target)) continue;
      const double ips = interaction_partition_size(p, k);
      EXPECT_GE(ips, 1.0);
      const double sq = ips * ips;
      EXPECT_NEAR(sq, std::round(sq), 1e-9);
      EXPECT_DOUBLE_EQ(sq, static_cast<double>(p.community_size(k.source) * p.community_size(k.target)));
    }
  }
}

TEST(InteractionPartition, NoTemporalLeakage) {
  // Claims after t must not change the partition at t.
  GenConfig cfg;
  cfg.n_interactions = 300;
  cfg.n_genes = 150;
  cfg.seed = 17;
  const auto c = generate_corpus(cfg).corpus;
  const int t = 2000;
  ClaimCorpus truncated = c;
  for (auto it = truncated.interactions.begin(); it != truncated.interactions.end();) {
    auto& cl = it->second.claims;
    std::erase_if(cl, [&](const ClaimRecord& r) { return r.year > t; });
    it = cl.empty() ? truncated.interactions.erase(it) : std::next(it);
  }
  ClaimCorpus perturbed = c;
  int extra = 0;
  for (auto& [k, rec] : perturbed.interactions) {
    if (extra++ % 3 != 0) continue;
    const PublicationId pid("late" + std::to_string(extra));
    PublicationMeta m;
    m.id = pid;
    m.year = 2011;
    perturbed.publications[pid] = m;
    rec.claims.push_back({k, pid, 2011, 1 - rec.claims.front().polarity});
  }
  const auto base = build_gene_graph(c, t);
  EXPECT_EQ(build_gene_graph(truncated, t).edges, base.edges);
  EXPECT_EQ(build_gene_graph(perturbed, t).edges, base.edges);
  const auto a = detect_all_variants(base, 9);
  const auto b = detect_all_variants(build_gene_graph(perturbed, t), 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].assignment, b[i].assignment);
}

}  // namespace
}  // namespace claimcal
