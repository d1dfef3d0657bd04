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

// Claim corpus data model: claims about directed gene interactions, the
// publications that made them, and the experimental strength table.

#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "claimcal/common.hpp"
#include "json.hpp"

namespace claimcal {

/// Gene symbol, upper-cased. Empty symbols and embedded whitespace are rejected.
class GeneId {
 public:
  GeneId() = default;
  explicit GeneId(std::string_view symbol) {
    if (symbol.empty()) throw Error("empty gene symbol");
    symbol_.reserve(symbol.size());
    for (unsigned char c : symbol) {
      if (std::isspace(c)) throw Error("gene symbol contains whitespace: '" + std::string(symbol) + "'");
      symbol_.push_back(static_cast<char>(std::toupper(c)));
    }
  }

  const std::string& str() const noexcept { return symbol_; }
  friend auto operator<=>(const GeneId&, const GeneId&) = default;

 private:
  std::string symbol_;
};

/// Ordered (source, target) pair; (A,B) and (B,A) are different interactions.
struct InteractionKey {
  GeneId source;
  GeneId target;

  friend auto operator<=>(const InteractionKey&, const InteractionKey&) = default;
  std::string str() const { return source.str() + "->" + target.str(); }
};

struct ClaimRecord {
  InteractionKey interaction;
  PublicationId publication;
  int year = 0;
  int polarity = 0;  // 1 = positive regulation claimed, 0 = negative

  friend bool operator==(const ClaimRecord&, const ClaimRecord&) = default;
};

struct PublicationMeta {
  PublicationId id;
  int year = 0;
  std::vector<std::string> authors;
  std::vector<std::string> affiliations;
  std::vector<PublicationId> references;
  std::optional<std::string> journal;
  std::optional<double> journal_score;
  std::optional<bool> top_affiliation;
  std::map<int, int> citation_history;

  friend bool operator==(const PublicationMeta&, const PublicationMeta&) = default;
};

struct InteractionRecord {
  InteractionKey key;
  std::optional<double> strength;
  std::vector<ClaimRecord> claims;  // sorted by (year, publication)

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

using StrengthMap = std::map<InteractionKey, double>;

struct ClaimCorpus {
  std::map<InteractionKey, InteractionRecord> interactions;
  std::map<PublicationId, PublicationMeta> publications;

  friend bool operator==(const ClaimCorpus&, const ClaimCorpus&) = default;

  std::size_t claim_count() const {
    std::size_t n = 0;
    for (const auto& [k, rec] : interactions) n += rec.claims.size();
    return n;
  }

  std::vector<ClaimRecord> all_claims() const {
    std::vector<ClaimRecord> out;
    out.reserve(claim_count());
    for (const auto& [k, rec] : interactions) out.insert(out.end(), rec.claims.begin(), rec.claims.end());
    return out;
  }

  const InteractionRecord& at(const InteractionKey& key) const {
    auto it = interactions.find(key);
    if (it == interactions.end()) throw Error("unknown interaction " + key.str());
    return it->second;
  }

  const PublicationMeta& publication(const PublicationId& id) const {
    auto it = publications.find(id);
    if (it == publications.end()) throw Error("unknown publication " + id.str());
    return it->second;
  }

  std::pair<int, int> year_range() const {
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (const auto& [k, rec] : interactions) {
      for (const auto& c : rec.claims) {
        lo = std::min(lo, c.year);
        hi = std::max(hi, c.year);
      }
    }
    return {lo, hi};
  }

  /// Checks referential integrity and per-record invariants; throws on the first violation.
  void validate() const {
    std::vector<std::string> dangling;
    for (const auto& [key, rec] : interactions) {
      if (!(rec.key == key)) throw Error("interaction record keyed inconsistently: " + key.str());
      if (rec.strength && (*rec.strength < 0.0 || *rec.strength > 1.0)) {
        throw Error("strength outside [0,1] for " + key.str());
      }
      std::set<PublicationId> seen;
      for (const auto& c : rec.claims) {
        if (!(c.interaction == key)) throw Error("claim filed under wrong interaction " + key.str());
        if (c.polarity != 0 && c.polarity != 1) throw Error("polarity must be 0 or 1");
        if (!seen.insert(c.publication).second) {
          throw Error("duplicate claim for " + key.str() + " in " + c.publication.str());
        }
        if (!publications.contains(c.publication)) dangling.push_back(c.publication.str());
      }
    }
    if (!dangling.empty()) {
      std::sort(dangling.begin(), dangling.end());
      dangling.erase(std::unique(dangling.begin(), dangling.end()), dangling.end());
      std::string msg = "claims reference unknown publications:";
      for (const auto& d : dangling) msg += " " + d;
      throw Error(msg);
    }
    for (const auto& [id, pub] : publications) {
      for (const auto& [year, count] : pub.citation_history) {
        if (year < pub.year) throw Error("citation year precedes publication year for " + id.str());
        if (count < 0) throw Error("negative citation count for " + id.str());
      }
      if (pub.journal_score && *pub.journal_score < 0) throw Error("negative journal score for " + id.str());
    }
  }
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t claims = 0;
  std::size_t duplicates_collapsed = 0;  // extra mentions merged into a majority record
  std::size_t ties_dropped = 0;          // (interaction, publication) pairs dropped on a polarity tie
};

struct LoadedCorpus {
  ClaimCorpus corpus;
  LoadReport report;
};

namespace detail {

inline bool is_header(const std::vector<std::string>& fields, std::string_view first) {
  return !fields.empty() && fields.front() == first;
}

inline void sort_claims(InteractionRecord& rec) {
  std::sort(rec.claims.begin(), rec.claims.end(), [](const ClaimRecord& a, const ClaimRecord& b) {
    return std::tie(a.year, a.publication) < std::tie(b.year, b.publication);
  });
}

}  // namespace detail

/// Reads the claims TSV (`source target pmid year polarity`) and collapses repeated
/// mentions of the same interaction in the same publication: majority polarity wins,
/// an exact tie drops the pair. Publications are not resolved here.
inline std::pair<std::vector<ClaimRecord>, LoadReport> parse_claims(std::istream& in,
                                                                    const std::string& source = "claims") {
  struct Tally {
    int year = 0;
    int pos = 0;
    int neg = 0;
  };
  std::map<std::pair<InteractionKey, PublicationId>, Tally> tallies;
  LoadReport report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split_fields(line);
    if (lineno == 1 && detail::is_header(f, "source")) continue;
    if (f.size() != 5) throw ParseError(source, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    const auto year = text::parse_int(f[3]);
    const auto pol = text::parse_int(f[4]);
    if (!year) throw ParseError(source, lineno, "bad year '" + f[3] + "'");
    if (!pol || (*pol != 0 && *pol != 1)) throw ParseError(source, lineno, "polarity must be 0 or 1");
    if (f[2].empty()) throw ParseError(source, lineno, "empty publication id");
    InteractionKey key;
    try {
      key = InteractionKey{GeneId(f[0]), GeneId(f[1])};
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
    auto& t = tallies[{key, PublicationId(f[2])}];
    if ((t.pos + t.neg) > 0 && t.year != *year) {
      throw ParseError(source, lineno, "publication " + f[2] + " listed with two different years");
    }
    t.year = static_cast<int>(*year);
    (*pol ? t.pos : t.neg)++;
    ++report.rows;
  }
  std::vector<ClaimRecord> claims;
  for (const auto& [kp, t] : tallies) {
    const int n = t.pos + t.neg;
    if (t.pos == t.neg) {
      ++report.ties_dropped;
      continue;
    }
    report.duplicates_collapsed += static_cast<std::size_t>(n - 1);
    claims.push_back(ClaimRecord{kp.first, kp.second, t.year, t.pos > t.neg ? 1 : 0});
  }
  report.claims = claims.size();
  return {std::move(claims), report};
}

inline PublicationMeta publication_from_json(const nlohmann::json& j) {
  PublicationMeta p;
  p.id = PublicationId(j.at("id").get<std::string>());
  p.year = j.at("year").get<int>();
  if (j.contains("authors")) p.authors = j["authors"].get<std::vector<std::string>>();
  if (j.contains("affiliations")) p.affiliations = j["affiliations"].get<std::vector<std::string>>();
  if (j.contains("references")) {
    for (const auto& r : j["references"]) p.references.emplace_back(r.get<std::string>());
  }
  if (j.contains("journal") && !j["journal"].is_null()) p.journal = j["journal"].get<std::string>();
  if (j.contains("journal_score") && !j["journal_score"].is_null()) {
    p.journal_score = j["journal_score"].get<double>();
  }
  if (j.contains("top_affiliation") && !j["top_affiliation"].is_null()) {
    p.top_affiliation = j["top_affiliation"].get<bool>();
  }
  if (j.contains("citation_history")) {
    for (const auto& [year, count] : j["citation_history"].items()) {
      const auto y = text::parse_int(year);
      if (!y) throw Error("citation_history key is not a year: " + year);
      p.citation_history[static_cast<int>(*y)] = count.get<int>();
    }
  }
  return p;
}

inline nlohmann::json publication_to_json(const PublicationMeta& p) {
  nlohmann::json j;
  j["id"] = p.id.str();
  j["year"] = p.year;
  j["authors"] = p.authors;
  j["affiliations"] = p.affiliations;
  auto refs = nlohmann::json::array();
  for (const auto& r : p.references) refs.push_back(r.str());
  j["references"] = refs;
  j["journal"] = p.journal ? nlohmann::json(*p.journal) : nlohmann::json(nullptr);
  if (p.journal_score) j["journal_score"] = *p.journal_score;
  if (p.top_affiliation) j["top_affiliation"] = *p.top_affiliation;
  auto hist = nlohmann::json::object();
  for (const auto& [y, c] : p.citation_history) hist[std::to_string(y)] = c;
  j["citation_history"] = hist;
  return j;
}

inline std::map<PublicationId, PublicationMeta> parse_publications(std::istream& in,
                                                                  const std::string& source = "publications") {
  std::map<PublicationId, PublicationMeta> pubs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto p = publication_from_json(nlohmann::json::parse(line));
      if (pubs.contains(p.id)) throw Error("duplicate publication id " + p.id.str());
      pubs.emplace(p.id, std::move(p));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return pubs;
}

/// Assembles a corpus from parsed claims and publications and validates it.
inline ClaimCorpus assemble_corpus(std::vector<ClaimRecord> claims,
                                   std::map<PublicationId, PublicationMeta> pubs) {
  ClaimCorpus corpus;
  corpus.publications = std::move(pubs);
  for (auto& c : claims) {
    auto& rec = corpus.interactions[c.interaction];
    rec.key = c.interaction;
    rec.claims.push_back(std::move(c));
  }
  for (auto& [k, rec] : corpus.interactions) detail::sort_claims(rec);
  corpus.validate();
  return corpus;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

inline LoadedCorpus load_corpus(const std::string& claims_path, const std::string& pubs_path) {
  auto cin = open_input(claims_path);
  auto [claims, report] = parse_claims(cin, claims_path);
  auto pin = open_input(pubs_path);
  auto pubs = parse_publications(pin, pubs_path);
  return {assemble_corpus(std::move(claims), std::move(pubs)), report};
}

inline StrengthMap parse_strengths(std::istream& in, const std::string& source = "strengths") {
  StrengthMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split_fields(line);
    if (lineno == 1 && detail::is_header(f, "source")) continue;
    if (f.size() != 3) throw ParseError(source, lineno, "expected 3 fields");
    const auto v = text::parse_double(f[2]);
    if (!v) throw ParseError(source, lineno, "bad strength '" + f[2] + "'");
    InteractionKey key{GeneId(f[0]), GeneId(f[1])};
    if (*v < 0.0 || *v > 1.0) {
      throw ParseError(source, lineno, "strength " + f[2] + " outside [0,1] for " + key.str());
    }
    out[key] = *v;
  }
  return out;
}

inline StrengthMap load_strengths(const std::string& path) {
  auto in = open_input(path);
  return parse_strengths(in, path);
}

/// Copies strengths onto interaction records; returns how many interactions got one.
inline std::size_t attach_strengths(ClaimCorpus& corpus, const StrengthMap& strengths) {
  std::size_t n = 0;
  for (auto& [key, rec] : corpus.interactions) {
    auto it = strengths.find(key);
    if (it != strengths.end()) {
      rec.strength = it->second;
      ++n;
    } else {
      rec.strength.reset();
    }
  }
  return n;
}

inline double mean_claim(const InteractionRecord& record) {
  if (record.claims.empty()) throw Error("no claims for " + record.key.str());
  double s = 0;
  for (const auto& c : record.claims) s += c.polarity;
  return s / static_cast<double>(record.claims.size());
}

/// 1 when the claimed polarity agrees with the experimental sign.
constexpr int claim_correctness(int polarity, int positive) noexcept {
  return 1 - (polarity > positive ? polarity - positive : positive - polarity);
}

// Metadata tables ------------------------------------------------------------

struct JournalScoreTable {
  std::map<std::string, std::map<int, double>> scores;  // journal -> year -> score

  /// Score in the publication year, else the latest earlier year on record.
  std::optional<double> lookup(const std::string& journal, int year) const {
    auto it = scores.find(journal);
    if (it == scores.end() || it->second.empty()) return std::nullopt;
    auto y = it->second.upper_bound(year);
    if (y == it->second.begin()) return std::nullopt;
    return std::prev(y)->second;
  }
};

struct AffiliationRankTable {
  std::map<std::string, int> ranks;
  int top_cutoff = 100;
};

struct CitationTable {
  std::map<PublicationId, std::map<int, int>> histories;
};

inline JournalScoreTable parse_journal_scores(std::istream& in, const std::string& source = "journals") {
  JournalScoreTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split_fields(line);
    if (lineno == 1 && detail::is_header(f, "journal")) continue;
    if (f.size() != 3) throw ParseError(source, lineno, "expected 3 fields");
    const auto y = text::parse_int(f[1]);
    const auto s = text::parse_double(f[2]);
    if (!y || !s || *s < 0) throw ParseError(source, lineno, "bad journal row");
    t.scores[f[0]][static_cast<int>(*y)] = *s;
  }
  return t;
}

inline AffiliationRankTable parse_affiliation_ranks(std::istream& in, const std::string& source = "affiliations") {
  AffiliationRankTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split_fields(line);
    if (lineno == 1 && detail::is_header(f, "affiliation")) continue;
    if (f.size() != 2) throw ParseError(source, lineno, "expected 2 fields");
    const auto r = text::parse_int(f[1]);
    if (!r || *r < 1) throw ParseError(source, lineno, "bad rank '" + f[1] + "'");
    t.ranks[f[0]] = static_cast<int>(*r);
  }
  return t;
}

/// Citation rows `pmid year count`.
inline CitationTable parse_citations(std::istream& in, const std::string& source = "citations") {
  CitationTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split_fields(line);
    if (lineno == 1 && detail::is_header(f, "pmid")) continue;
    if (f.size() != 3) throw ParseError(source, lineno, "expected 3 fields");
    const auto y = text::parse_int(f[1]);
    const auto c = text::parse_int(f[2]);
    if (!y || !c || *c < 0) throw ParseError(source, lineno, "bad citation row");
    t.histories[PublicationId(f[0])][static_cast<int>(*y)] = static_cast<int>(*c);
  }
  return t;
}

struct JoinCoverage {
  std::size_t publications = 0;
  std::size_t with_journal_score = 0;
  std::size_t with_affiliation_flag = 0;
  std::size_t with_citations = 0;

  double fraction(std::size_t n) const {
    return publications == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(publications);
  }
};

/// Joins journal scores, affiliation ranks and citation histories onto publications.
/// Failed joins leave the field missing; coverage is reported, never fatal.
inline std::pair<ClaimCorpus, JoinCoverage> join_metadata(ClaimCorpus corpus, const JournalScoreTable& journals,
                                                          const AffiliationRankTable& affiliations,
                                                          const CitationTable& citations) {
  JoinCoverage cov;
  for (auto& [id, pub] : corpus.publications) {
    ++cov.publications;
    pub.journal_score.reset();
    if (pub.journal) pub.journal_score = journals.lookup(*pub.journal, pub.year);
    pub.top_affiliation.reset();
    if (!pub.affiliations.empty()) {
      bool top = false;
      for (const auto& a : pub.affiliations) {
        auto it = affiliations.ranks.find(a);
        if (it != affiliations.ranks.end() && it->second <= affiliations.top_cutoff) top = true;
      }
      pub.top_affiliation = top;
    }
    if (auto it = citations.histories.find(id); it != citations.histories.end()) {
      pub.citation_history = it->second;
    }
    cov.with_journal_score += pub.journal_score.has_value();
    cov.with_affiliation_flag += pub.top_affiliation.has_value();
    cov.with_citations += !pub.citation_history.empty();
  }
  return {std::move(corpus), cov};
}

// Time windows -----------------------------------------------------------------

/// Look-back window in whole years; unbounded covers all history.
class Window {
 public:
  static Window years(int w) {
    if (w < 1) throw Error("window must be a positive number of years");
    return Window(w);
  }
  static Window unbounded() { return Window(std::nullopt); }

  bool is_unbounded() const noexcept { return !years_.has_value(); }
  int length() const { return years_.value(); }

  /// Membership of `year` in (t - w, t] (or (t - w, t) when strict).
  bool contains(int year, int t, bool strict) const noexcept {
    if (strict ? year >= t : year > t) return false;
    return !years_ || year > t - *years_;
  }

  std::string label() const { return years_ ? std::to_string(*years_) : "inf"; }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  explicit Window(std::optional<int> w) : years_(w) {}
  std::optional<int> years_;
};

/// Default window set for batch features.
inline std::vector<Window> default_windows() {
  return {Window::years(1), Window::years(3), Window::years(5), Window::unbounded()};
}

/// Claims on `key` whose year lies in (t - w, t], or (t - w, t) when strict.
inline std::vector<ClaimRecord> batch(const ClaimCorpus& corpus, const InteractionKey& key, int t, Window w,
                                      bool strict = false) {
  const auto& rec = corpus.at(key);
  std::vector<ClaimRecord> out;
  for (const auto& c : rec.claims) {
    if (w.contains(c.year, t, strict)) out.push_back(c);
  }
  return out;
}

// Serialization ----------------------------------------------------------------

inline void write_claims(std::ostream& out, const ClaimCorpus& corpus) {
  out << "source\ttarget\tpmid\tyear\tpolarity\n";
  for (const auto& [key, rec] : corpus.interactions) {
    for (const auto& c : rec.claims) {
      out << key.source.str() << '\t' << key.target.str() << '\t' << c.publication.str() << '\t' << c.year << '\t'
          << c.polarity << '\n';
    }
  }
}

inline void write_publications(std::ostream& out, const ClaimCorpus& corpus) {
  for (const auto& [id, pub] : corpus.publications) out << publication_to_json(pub).dump() << '\n';
}

inline void write_strengths(std::ostream& out, const StrengthMap& strengths) {
  out << "source\ttarget\tstrength\n";
  for (const auto& [key, s] : strengths) {
    out << key.source.str() << '\t' << key.target.str() << '\t' << text::fmt(s) << '\n';
  }
}

inline void write_journal_scores(std::ostream& out, const JournalScoreTable& t) {
  out << "journal\tyear\tscore\n";
  for (const auto& [j, years] : t.scores) {
    for (const auto& [y, s] : years) out << j << '\t' << y << '\t' << text::fmt(s) << '\n';
  }
}

inline void write_affiliation_ranks(std::ostream& out, const AffiliationRankTable& t) {
  out << "affiliation\trank\n";
  for (const auto& [a, r] : t.ranks) out << a << '\t' << r << '\n';
}

}  // namespace claimcal
