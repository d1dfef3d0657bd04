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

#include <sstream>

#include "claimcal/corpus.hpp"
#include "claimcal/synth.hpp"
#include "test_util.hpp"

namespace claimcal {
namespace {

using testing::CorpusBuilder;
using testing::key;

std::map<PublicationId, PublicationMeta> pubs_for(std::initializer_list<std::pair<const char*, int>> ids) {
  std::map<PublicationId, PublicationMeta> m;
  for (const auto& [id, year] : ids) {
    PublicationMeta p;
    p.id = PublicationId(id);
    p.year = year;
    m[p.id] = p;
  }
  return m;
}

TEST(LoadCorpus, IdenticalMentionsCollapse) {
  std::istringstream in("source\ttarget\tpmid\tyear\tpolarity\nA\tB\tp1\t2000\t1\nA\tB\tp1\t2000\t1\n");
  auto [claims, report] = parse_claims(in);
  ASSERT_EQ(claims.size(), 1u);
  EXPECT_EQ(claims[0].polarity, 1);
  EXPECT_EQ(report.duplicates_collapsed, 1u);
  EXPECT_EQ(report.ties_dropped, 0u);
}

TEST(LoadCorpus, PolarityTieDropsBoth) {
  std::istringstream in("A\tB\tp1\t2000\t1\nA\tB\tp1\t2000\t0\n");
  auto [claims, report] = parse_claims(in);
  EXPECT_TRUE(claims.empty());
  EXPECT_EQ(report.ties_dropped, 1u);
}

TEST(LoadCorpus, MajorityPolarityWins) {
  std::istringstream in("A\tB\tp1\t2000\t0\nA\tB\tp1\t2000\t1\nA\tB\tp1\t2000\t0\n");
  auto [claims, report] = parse_claims(in);
  ASSERT_EQ(claims.size(), 1u);
  EXPECT_EQ(claims[0].polarity, 0);
}

TEST(LoadCorpus, UnknownPublicationIsAnError) {
  std::istringstream in("A\tB\tp1\t2000\t1\nA\tC\tp9\t2001\t1\n");
  auto [claims, report] = parse_claims(in);
  try {
    assemble_corpus(claims, pubs_for({{"p1", 2000}}));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("p9"), std::string::npos);
  }
}

TEST(LoadCorpus, MalformedRowNamesLine) {
  std::istringstream in("source\ttarget\tpmid\tyear\tpolarity\nA\tB\tp1\t2000\t1\nA\tB\tp2\tyear\t1\n");
  try {
    parse_claims(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadCorpus, RejectsBadPolarityAndFieldCount) {
  std::istringstream a("A\tB\tp1\t2000\t2\n");
  EXPECT_THROW(parse_claims(a), ParseError);
  std::istringstream b("A\tB\tp1\t2000\n");
  EXPECT_THROW(parse_claims(b), ParseError);
}

TEST(LoadCorpus, GeneSymbolsAreCaseNormalized) {
  EXPECT_EQ(GeneId("tp53"), GeneId("TP53"));
  EXPECT_THROW(GeneId("T P53"), Error);
  EXPECT_THROW(GeneId(""), Error);
  EXPECT_NE(key("A", "B"), key("B", "A"));
}

TEST(LoadStrengths, ParsesRow) {
  std::istringstream in("A B 0.73\n");
  auto m = parse_strengths(in);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m.at(key("A", "B")), 0.73);
}

TEST(LoadStrengths, OutOfRangeNamesKey) {
  std::istringstream in("A B 1.2\n");
  try {
    parse_strengths(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("A->B"), std::string::npos);
  }
}

TEST(LoadStrengths, EmptyFileGivesEmptyMap) {
  std::istringstream in("");
  EXPECT_TRUE(parse_strengths(in).empty());
}

TEST(MeanClaim, Examples) {
  auto c = CorpusBuilder()
               .claim("A", "B", "p1", 2000, 1)
               .claim("A", "B", "p2", 2000, 1)
               .claim("A", "B", "p3", 2001, 0)
               .claim("C", "D", "p1", 2000, 0)
               .claim("C", "D", "p2", 2000, 0)
               .claim("E", "F", "p1", 2000, 1)
               .build();
  EXPECT_DOUBLE_EQ(mean_claim(c.at(key("A", "B"))), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_claim(c.at(key("C", "D"))), 0.0);
  EXPECT_DOUBLE_EQ(mean_claim(c.at(key("E", "F"))), 1.0);
  InteractionRecord empty;
  EXPECT_THROW(mean_claim(empty), Error);
}

TEST(ClaimCorrectness, Examples) {
  EXPECT_EQ(claim_correctness(1, 1), 1);
  EXPECT_EQ(claim_correctness(0, 1), 0);
  EXPECT_EQ(claim_correctness(0, 0), 1);
  EXPECT_EQ(claim_correctness(1, 0), 0);
}

TEST(JoinMetadata, MissingJoinsStayMissing) {
  auto c = CorpusBuilder().claim("A", "B", "p1", 2001, 1).claim("A", "B", "p2", 2002, 1).build();
  c.publications.at(PublicationId("p1")).journal = "J1";
  c.publications.at(PublicationId("p2")).journal = "JX";
  c.publications.at(PublicationId("p1")).affiliations = {"MIT"};
  c.publications.at(PublicationId("p2")).affiliations = {"Nowhere"};
  JournalScoreTable js;
  js.scores["J1"][2000] = 1.5;
  AffiliationRankTable ar;
  ar.ranks["MIT"] = 1;
  CitationTable ct;
  ct.histories[PublicationId("p1")] = {{2001, 3}, {2002, 5}};
  auto [out, cov] = join_metadata(c, js, ar, ct);
  const auto& p1 = out.publication(PublicationId("p1"));
  const auto& p2 = out.publication(PublicationId("p2"));
  EXPECT_DOUBLE_EQ(p1.journal_score.value(), 1.5);  // latest earlier year
  EXPECT_FALSE(p2.journal_score.has_value());
  EXPECT_TRUE(p1.top_affiliation.value());
  EXPECT_FALSE(p2.top_affiliation.value());
  EXPECT_EQ(p1.citation_history, (std::map<int, int>{{2001, 3}, {2002, 5}}));
  EXPECT_TRUE(p2.citation_history.empty());
  EXPECT_EQ(cov.publications, 2u);
  EXPECT_EQ(cov.with_journal_score, 1u);
  EXPECT_EQ(cov.with_citations, 1u);
}

ClaimCorpus three_years() {
  return CorpusBuilder()
      .claim("A", "B", "p1", 2000, 1)
      .claim("A", "B", "p2", 2001, 1)
      .claim("A", "B", "p3", 2003, 0)
      .build();
}

std::vector<int> years_of(const std::vector<ClaimRecord>& v) {
  std::vector<int> y;
  for (const auto& c : v) y.push_back(c.year);
  return y;
}

TEST(Batch, WindowExamples) {
  const auto c = three_years();
  EXPECT_EQ(years_of(batch(c, key("A", "B"), 2003, Window::years(3))), (std::vector<int>{2001, 2003}));
  EXPECT_EQ(years_of(batch(c, key("A", "B"), 2003, Window::years(3), true)), (std::vector<int>{2001}));
  EXPECT_EQ(years_of(batch(c, key("A", "B"), 2003, Window::unbounded())), (std::vector<int>{2000, 2001, 2003}));
  EXPECT_THROW(batch(c, key("X", "Y"), 2003, Window::unbounded()), Error);
  EXPECT_THROW(Window::years(0), Error);
}

// Properties over generated corpora ---------------------------------------------

GenConfig small_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.n_interactions = 150;
  cfg.n_genes = 120;
  cfg.max_claims = 20;
  cfg.seed = seed;
  return cfg;
}

TEST(CorpusProperties, SerializationRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = generate_corpus(small_config(seed)).corpus;
    StrengthMap strengths;
    for (const auto& [k, rec] : c.interactions) {
      if (rec.strength) strengths[k] = *rec.strength;
    }
    std::stringstream claims, pubs, str;
    write_claims(claims, c);
    write_publications(pubs, c);
    write_strengths(str, strengths);
    auto [parsed, report] = parse_claims(claims);
    EXPECT_EQ(report.ties_dropped, 0u);
    auto back = assemble_corpus(parsed, parse_publications(pubs));
    attach_strengths(back, parse_strengths(str));
    EXPECT_EQ(back, c) << "seed " << seed;
  }
}

TEST(CorpusProperties, AtMostOneClaimPerInteractionAndPublication) {
  std::ostringstream raw;
  Rng rng(3);
  for (int i = 0; i < 400; ++i) {
    raw << "G" << uniform_index(rng, 4) << "\tH\tp" << uniform_index(rng, 10) << "\t2000\t" << uniform_index(rng, 2)
        << "\n";
  }
  std::istringstream in(raw.str());
  auto [claims, report] = parse_claims(in);
  std::set<std::pair<InteractionKey, PublicationId>> seen;
  for (const auto& c : claims) EXPECT_TRUE(seen.insert({c.interaction, c.publication}).second);
  EXPECT_EQ(report.rows, 400u);
}

TEST(CorpusProperties, MeanClaimIsPermutationInvariant) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    InteractionRecord rec;
    rec.key = key("A", "B");
    const auto n = 1 + uniform_index(rng, 30);
    for (std::size_t i = 0; i < n; ++i) {
      rec.claims.push_back({rec.key, PublicationId("p" + std::to_string(i)), 2000,
                            static_cast<int>(uniform_index(rng, 2))});
    }
    const double m = mean_claim(rec);
    shuffle(rec.claims, rng);
    EXPECT_EQ(mean_claim(rec), m);
  }
}

TEST(CorpusProperties, UnboundedBatchIsAllClaimsUpToT) {
  const auto c = generate_corpus(small_config(9)).corpus;
  for (const auto& [k, rec] : c.interactions) {
    for (int t : {1995, 2000, 2010}) {
      std::size_t n = 0;
      for (const auto& cl : rec.claims) n += cl.year <= t;
      EXPECT_EQ(batch(c, k, t, Window::unbounded()).size(), n);
    }
  }
}

}  // namespace
}  // namespace claimcal
