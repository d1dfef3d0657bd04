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

// claimcal command-line driver.
//
// Every subcommand reads and writes plain files under an output directory:
//
//   corpus/claims.tsv, corpus/publications.jsonl, corpus/strengths.tsv   ingest
//   thresholds.json, curves/{negative,positive}.csv, classes.tsv           partition
//   features/interactions.tsv, features/claims.tsv                          features
//   models/<task>.json                                                      train
//   eval.json, auc_samples.csv                                              evaluate
//   policy.csv, policy.json, plots/policy_*.svg                             policy
//   report/*.csv, plots/*.svg                                               report
//
// `run --config pipeline.ini` chains them and caches each stage under .cache/.

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "claimcal/eval.hpp"
#include "claimcal/report.hpp"
#include "claimcal/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace claimcal;

namespace {

// Files and hashing ----------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
  if (!out) throw Error("write failed for " + p.string());
}

template <typename F>
void write_with(const fs::path& p, F&& body) {
  std::ostringstream s;
  body(s);
  write_file(p, s.str());
}

std::string sha256(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += digits[md[i] >> 4];
    out += digits[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& p) { return sha256(read_file(p)); }

double num_or_missing(const json& j) { return j.is_number() ? j.get<double>() : kMissing; }

// Configuration ---------------------------------------------------------------------

struct InputConfig {
  fs::path synth;  // generator config; replaces the data files when set
  fs::path claims, publications, strengths;
  fs::path journals, affiliations, citations;  // optional metadata tables

  json to_json() const {
    return {{"synth", synth.string()},         {"claims", claims.string()},
            {"publications", publications.string()}, {"strengths", strengths.string()},
            {"journals", journals.string()},   {"affiliations", affiliations.string()},
            {"citations", citations.string()}};
  }
};

struct PartitionConfig {
  std::string mode = "optimize";  // optimize | percentile | fixed
  double epsilon = 0.15;          // percentile mode
  double theta_minus = kMissing, theta_plus = kMissing;  // fixed mode
  double grid_step = 0.001;
  double prior_a = 1.0, prior_b = 1.0;
  double min_class_share = 0.05;
  int max_iterations = 25;

  json to_json() const {
    return {{"mode", mode},           {"epsilon", epsilon},     {"theta_minus", theta_minus},
            {"theta_plus", theta_plus}, {"grid_step", grid_step}, {"prior_a", prior_a},
            {"prior_b", prior_b},     {"min_class_share", min_class_share}, {"max_iterations", max_iterations}};
  }
};

struct FeatureConfig {
  bool network = true, bipartite = true, citations = true;
  std::string windows = "1,3,5,inf";
  std::string lognormal = "as_printed";  // as_printed | standard

  json to_json() const {
    return {{"network", network},
            {"bipartite", bipartite},
            {"citations", citations},
            {"windows", windows},
            {"lognormal", lognormal}};
  }

  FeatureOptions options(std::uint64_t seed) const {
    FeatureOptions o;
    o.network = network;
    o.bipartite = bipartite;
    o.citations = citations;
    o.windows.clear();
    std::stringstream ss(windows);
    for (std::string w; std::getline(ss, w, ',');) {
      const auto t = std::string(text::trim(w));
      if (t == "inf") {
        o.windows.push_back(Window::unbounded());
      } else if (auto y = text::parse_int(t)) {
        o.windows.push_back(Window::years(static_cast<int>(*y)));
      } else {
        throw Error("bad window '" + t + "' (expected a year count or inf)");
      }
    }
    if (o.windows.empty()) throw Error("at least one window is required");
    if (lognormal == "as_printed") {
      o.citation_fit.exponent = LognormalExponent::AsPrinted;
    } else if (lognormal == "standard") {
      o.citation_fit.exponent = LognormalExponent::Standard;
    } else {
      throw Error("lognormal must be as_printed or standard");
    }
    o.seed = derive_seed(seed, 1);
    o.citation_fit.seed = derive_seed(seed, 2);
    return o;
  }
};

struct ModelConfig {
  std::string kind = "forest";  // forest | logit
  int trees = 100, depth = 2;
  double min_leaf = 0.02;
  int nonzeros = 5;

  json to_json() const {
    return {{"kind", kind}, {"trees", trees}, {"depth", depth}, {"min_leaf", min_leaf}, {"nonzeros", nonzeros}};
  }

  EvalOptions options(std::uint64_t seed) const {
    EvalOptions o;
    o.model = parse_model_kind(kind);
    if (trees < 1 || depth < 1 || !(min_leaf >= 0.0 && min_leaf < 0.5) || nonzeros < 1) {
      throw Error("invalid model parameters");
    }
    o.forest.n_trees = trees;
    o.forest.max_depth = depth;
    o.forest.min_leaf_fraction = min_leaf;
    o.logit.target_nnz = static_cast<std::size_t>(nonzeros);
    o.seed = derive_seed(seed, 3);
    return o;
  }
};

struct EvalConfig {
  std::string tasks = "neutral,positive_bayes";
  int repeats = 20, folds = 3;
  std::string split = "grouped";    // grouped | popularity
  std::string labels = "partition";  // partition | truth

  json to_json() const {
    return {{"tasks", tasks}, {"repeats", repeats}, {"folds", folds}, {"split", split}, {"labels", labels}};
  }

  std::vector<Task> task_list() const {
    std::vector<Task> out;
    std::stringstream ss(tasks);
    for (std::string t; std::getline(ss, t, ',');) out.push_back(parse_task(text::trim(t)));
    if (out.empty()) throw Error("no tasks configured");
    return out;
  }
};

struct PolicyConfig {
  bool enabled = true;
  std::string task = "positive_bayes";
  int betas = 5;
  int repeats = 20, folds = 3;
  bool community = true;
  std::string community_task = "neutral";

  json to_json() const {
    return {{"enabled", enabled}, {"task", task},           {"betas", betas},
            {"repeats", repeats}, {"folds", folds},         {"community", community},
            {"community_task", community_task}};
  }
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  fs::path out;
  unsigned threads = 0;
  InputConfig input;
  PartitionConfig partition;
  FeatureConfig features;
  ModelConfig model;
  EvalConfig eval;
  PolicyConfig policy;
};

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("option " + key + ": expected a boolean, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  auto d = text::parse_double(v);
  if (!d) throw Error("option " + key + ": expected a number, got '" + v + "'");
  return *d;
}

int parse_integer(const std::string& key, const std::string& v) {
  auto d = text::parse_int(v);
  if (!d) throw Error("option " + key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(*d);
}

/// Reads an INI pipeline config. Relative paths resolve against the file's directory.
PipelineConfig load_pipeline_config(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  auto resolve = [&](const std::string& v) { return v.empty() ? fs::path() : (base / v).lexically_normal(); };

  PipelineConfig c;
  bool have_seed = false;
  using Setter = std::function<void(const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> keys;
  auto& run = keys["run"];
  run["seed"] = [&](const std::string& v) {
    auto s = text::parse_int(v);
    if (!s || *s < 0) throw Error("option run.seed: expected a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(*s);
    have_seed = true;
  };
  run["out"] = [&](const std::string& v) { c.out = resolve(v); };
  run["threads"] = [&](const std::string& v) { c.threads = static_cast<unsigned>(parse_integer("run.threads", v)); };
  auto& in = keys["input"];
  in["synth"] = [&](const std::string& v) { c.input.synth = resolve(v); };
  in["claims"] = [&](const std::string& v) { c.input.claims = resolve(v); };
  in["publications"] = [&](const std::string& v) { c.input.publications = resolve(v); };
  in["strengths"] = [&](const std::string& v) { c.input.strengths = resolve(v); };
  in["journals"] = [&](const std::string& v) { c.input.journals = resolve(v); };
  in["affiliations"] = [&](const std::string& v) { c.input.affiliations = resolve(v); };
  in["citations"] = [&](const std::string& v) { c.input.citations = resolve(v); };
  auto& pa = keys["partition"];
  auto& P = c.partition;
  pa["mode"] = [&](const std::string& v) { P.mode = v; };
  pa["epsilon"] = [&](const std::string& v) { P.epsilon = parse_real("partition.epsilon", v); };
  pa["theta_minus"] = [&](const std::string& v) { P.theta_minus = parse_real("partition.theta_minus", v); };
  pa["theta_plus"] = [&](const std::string& v) { P.theta_plus = parse_real("partition.theta_plus", v); };
  pa["grid_step"] = [&](const std::string& v) { P.grid_step = parse_real("partition.grid_step", v); };
  pa["prior_a"] = [&](const std::string& v) { P.prior_a = parse_real("partition.prior_a", v); };
  pa["prior_b"] = [&](const std::string& v) { P.prior_b = parse_real("partition.prior_b", v); };
  pa["min_class_share"] = [&](const std::string& v) { P.min_class_share = parse_real("partition.min_class_share", v); };
  pa["max_iterations"] = [&](const std::string& v) { P.max_iterations = parse_integer("partition.max_iterations", v); };
  auto& fe = keys["features"];
  fe["network"] = [&](const std::string& v) { c.features.network = parse_bool("features.network", v); };
  fe["bipartite"] = [&](const std::string& v) { c.features.bipartite = parse_bool("features.bipartite", v); };
  fe["citations"] = [&](const std::string& v) { c.features.citations = parse_bool("features.citations", v); };
  fe["windows"] = [&](const std::string& v) { c.features.windows = v; };
  fe["lognormal"] = [&](const std::string& v) { c.features.lognormal = v; };
  auto& mo = keys["model"];
  mo["kind"] = [&](const std::string& v) { c.model.kind = v; };
  mo["trees"] = [&](const std::string& v) { c.model.trees = parse_integer("model.trees", v); };
  mo["depth"] = [&](const std::string& v) { c.model.depth = parse_integer("model.depth", v); };
  mo["min_leaf"] = [&](const std::string& v) { c.model.min_leaf = parse_real("model.min_leaf", v); };
  mo["nonzeros"] = [&](const std::string& v) { c.model.nonzeros = parse_integer("model.nonzeros", v); };
  auto& ev = keys["evaluate"];
  ev["tasks"] = [&](const std::string& v) { c.eval.tasks = v; };
  ev["repeats"] = [&](const std::string& v) { c.eval.repeats = parse_integer("evaluate.repeats", v); };
  ev["folds"] = [&](const std::string& v) { c.eval.folds = parse_integer("evaluate.folds", v); };
  ev["split"] = [&](const std::string& v) { c.eval.split = v; };
  ev["labels"] = [&](const std::string& v) { c.eval.labels = v; };
  auto& po = keys["policy"];
  po["enabled"] = [&](const std::string& v) { c.policy.enabled = parse_bool("policy.enabled", v); };
  po["task"] = [&](const std::string& v) { c.policy.task = v; };
  po["betas"] = [&](const std::string& v) { c.policy.betas = parse_integer("policy.betas", v); };
  po["repeats"] = [&](const std::string& v) { c.policy.repeats = parse_integer("policy.repeats", v); };
  po["folds"] = [&](const std::string& v) { c.policy.folds = parse_integer("policy.folds", v); };
  po["community"] = [&](const std::string& v) { c.policy.community = parse_bool("policy.community", v); };
  po["community_task"] = [&](const std::string& v) { c.policy.community_task = v; };

  for (const auto& [section, body] : tree) {
    auto s = keys.find(section);
    if (s == keys.end()) {
      if (body.empty()) throw Error(path.string() + ": key '" + section + "' outside a section");
      throw Error(path.string() + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto k = s->second.find(key);
      if (k == s->second.end()) throw Error(path.string() + ": unknown option " + section + "." + key);
      k->second(std::string(text::trim(value.data())));
    }
  }
  if (!have_seed) throw Error(path.string() + ": run.seed is required");
  if (c.out.empty()) c.out = base / "out";
  const auto& I = c.input;
  if (I.synth.empty() && (I.claims.empty() || I.publications.empty() || I.strengths.empty())) {
    throw Error(path.string() + ": [input] needs synth, or claims, publications and strengths");
  }
  if (!I.synth.empty() && !(I.claims.empty() && I.publications.empty() && I.strengths.empty())) {
    throw Error(path.string() + ": [input] synth excludes explicit data files");
  }
  return c;
}

std::string config_help() {
  const PipelineConfig d;
  std::ostringstream o;
  o << "Pipeline config (INI; relative paths resolve against the config file):\n"
    << "  [run]        seed (required), out = out, threads = 0 (all cores)\n"
    << "  [input]      synth = generator JSON, or claims, publications, strengths\n"
    << "               journals, affiliations, citations (optional metadata tables)\n"
    << "  [partition]  mode = " << d.partition.mode << " (optimize|percentile|fixed), epsilon = "
    << text::fmt(d.partition.epsilon) << ", theta_minus, theta_plus (fixed mode),\n"
    << "               grid_step = " << text::fmt(d.partition.grid_step) << ", prior_a = 1, prior_b = 1,"
    << " min_class_share = " << text::fmt(d.partition.min_class_share)
    << ", max_iterations = " << d.partition.max_iterations << "\n"
    << "  [features]   network = true, bipartite = true, citations = true, windows = " << d.features.windows
    << ", lognormal = " << d.features.lognormal << " (as_printed|standard)\n"
    << "  [model]      kind = " << d.model.kind << " (forest|logit), trees = " << d.model.trees
    << ", depth = " << d.model.depth << ", min_leaf = " << text::fmt(d.model.min_leaf)
    << ", nonzeros = " << d.model.nonzeros << "\n"
    << "  [evaluate]   tasks = " << d.eval.tasks << ", repeats = " << d.eval.repeats << ", folds = " << d.eval.folds
    << ", split = " << d.eval.split << " (grouped|popularity), labels = " << d.eval.labels
    << " (partition|truth)\n"
    << "  [policy]     enabled = true, task = " << d.policy.task << ", betas = " << d.policy.betas
    << ", repeats = " << d.policy.repeats << ", folds = " << d.policy.folds << ", community = true, community_task = "
    << d.policy.community_task << "\n";
  return o.str();
}

// Shared loaders -------------------------------------------------------------------

struct CorpusPaths {
  fs::path claims, publications, strengths;

  static CorpusPaths in(const fs::path& dir) {
    return {dir / "claims.tsv", dir / "publications.jsonl", dir / "strengths.tsv"};
  }
  std::vector<fs::path> all() const { return {claims, publications, strengths}; }
};

struct LoadedInputs {
  ClaimCorpus corpus;
  StrengthMap strengths;
};

LoadedInputs load_inputs(const CorpusPaths& p) {
  LoadedInputs out;
  out.corpus = load_corpus(p.claims.string(), p.publications.string()).corpus;
  out.strengths = load_strengths(p.strengths.string());
  attach_strengths(out.corpus, out.strengths);
  return out;
}

/// Class labels from a TSV with source, target and class columns (classes.tsv or truth.tsv).
LabelMap read_labels(const fs::path& path) {
  auto in = open_input(path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty label file");
  const auto header = text::split_fields(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(path.string(), 1, "missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto cs = col("source"), ct = col("target"), cc = col("class");
  LabelMap labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split_fields(line);
    if (f.size() != header.size()) throw ParseError(path.string(), lineno, "wrong field count");
    try {
      labels[InteractionKey{GeneId(f[cs]), GeneId(f[ct])}] = parse_class_label(f[cc]);
    } catch (const Error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return labels;
}

FeatureTable load_table(const fs::path& p) {
  auto in = open_input(p.string());
  return read_feature_table(in, p.string());
}

/// Keeps rows whose interaction carries a label.
FeatureTable labeled_rows(const FeatureTable& t, const LabelMap& labels) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (labels.contains(t.interaction[i])) idx.push_back(i);
  }
  return t.subset(idx);
}

std::vector<InteractionKey> unique_keys(const FeatureTable& t) {
  std::set<InteractionKey> s(t.interaction.begin(), t.interaction.end());
  return {s.begin(), s.end()};
}

ClaimCorpus restrict_corpus(const ClaimCorpus& corpus, const LabelMap& labels) {
  ClaimCorpus out;
  for (const auto& [k, rec] : corpus.interactions) {
    if (!labels.contains(k)) continue;
    out.interactions[k] = rec;
    for (const auto& c : rec.claims) out.publications[c.publication] = corpus.publication(c.publication);
  }
  return out;
}

std::string svg_name(const std::string& s) {
  std::string out = s;
  for (auto& ch : out) {
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  }
  return out;
}

// Stages ---------------------------------------------------------------------------
// Each stage writes under `out` and returns the written paths relative to `out`.

using Outputs = std::vector<std::string>;

Outputs write_corpus_files(const fs::path& dir, const fs::path& out, const ClaimCorpus& corpus,
                           const StrengthMap& strengths) {
  write_with(dir / "claims.tsv", [&](std::ostream& o) { write_claims(o, corpus); });
  write_with(dir / "publications.jsonl", [&](std::ostream& o) { write_publications(o, corpus); });
  write_with(dir / "strengths.tsv", [&](std::ostream& o) { write_strengths(o, strengths); });
  const auto rel = fs::relative(dir, out);
  return {(rel / "claims.tsv").string(), (rel / "publications.jsonl").string(), (rel / "strengths.tsv").string()};
}

Outputs stage_synth(const fs::path& config_path, std::optional<std::uint64_t> seed, const fs::path& dir) {
  json j;
  try {
    j = json::parse(read_file(config_path));
  } catch (const json::exception& e) {
    throw Error(config_path.string() + ": " + e.what());
  }
  auto cfg = gen_config_from_json(j);
  if (seed) cfg.seed = *seed;
  const auto s = generate_corpus(cfg);
  auto outputs = write_corpus_files(dir, dir, s.corpus, s.strengths);
  write_with(dir / "truth.tsv", [&](std::ostream& o) { write_truth(o, s); });
  outputs.push_back("truth.tsv");
  std::cout << "synth: " << s.corpus.interactions.size() << " interactions, " << s.corpus.claim_count()
            << " claims -> " << dir.string() << "\n";
  return outputs;
}

Outputs stage_ingest(const InputConfig& in, const fs::path& out) {
  const fs::path dir = out / "corpus";
  json report;
  ClaimCorpus corpus;
  StrengthMap strengths;
  Outputs outputs;
  if (!in.synth.empty()) {
    // The generator writes the standard formats, which are then ingested like real data.
    const fs::path gen = out / "synth";
    stage_synth(in.synth, std::nullopt, gen);
    for (const auto& f : {"claims.tsv", "publications.jsonl", "strengths.tsv", "truth.tsv"}) {
      outputs.push_back((fs::path("synth") / f).string());
    }
    const auto loaded = load_corpus((gen / "claims.tsv").string(), (gen / "publications.jsonl").string());
    corpus = loaded.corpus;
    strengths = load_strengths((gen / "strengths.tsv").string());
    report["load"] = {{"rows", loaded.report.rows},
                      {"claims", loaded.report.claims},
                      {"duplicates_collapsed", loaded.report.duplicates_collapsed},
                      {"ties_dropped", loaded.report.ties_dropped}};
    fs::create_directories(dir);
    fs::copy_file(gen / "truth.tsv", dir / "truth.tsv", fs::copy_options::overwrite_existing);
    outputs.push_back("corpus/truth.tsv");
  } else {
    const auto loaded = load_corpus(in.claims.string(), in.publications.string());
    corpus = loaded.corpus;
    strengths = load_strengths(in.strengths.string());
    report["load"] = {{"rows", loaded.report.rows},
                      {"claims", loaded.report.claims},
                      {"duplicates_collapsed", loaded.report.duplicates_collapsed},
                      {"ties_dropped", loaded.report.ties_dropped}};
  }

  if (!in.journals.empty() || !in.affiliations.empty() || !in.citations.empty()) {
    JournalScoreTable journals;
    AffiliationRankTable affiliations;
    CitationTable citations;
    if (!in.journals.empty()) {
      auto f = open_input(in.journals.string());
      journals = parse_journal_scores(f, in.journals.string());
    }
    if (!in.affiliations.empty()) {
      auto f = open_input(in.affiliations.string());
      affiliations = parse_affiliation_ranks(f, in.affiliations.string());
    }
    if (!in.citations.empty()) {
      auto f = open_input(in.citations.string());
      citations = parse_citations(f, in.citations.string());
    }
    // Only the supplied tables overwrite the publication fields.
    auto [joined, cov] = join_metadata(corpus, journals, affiliations, citations);
    for (auto& [id, pub] : corpus.publications) {
      const auto& j = joined.publications.at(id);
      if (!in.journals.empty()) pub.journal_score = j.journal_score;
      if (!in.affiliations.empty()) pub.top_affiliation = j.top_affiliation;
      if (!in.citations.empty()) pub.citation_history = j.citation_history;
    }
    report["join"] = {{"publications", cov.publications},
                      {"journal_score", in.journals.empty() ? json(nullptr) : json(cov.fraction(cov.with_journal_score))},
                      {"top_affiliation",
                       in.affiliations.empty() ? json(nullptr) : json(cov.fraction(cov.with_affiliation_flag))},
                      {"citations", in.citations.empty() ? json(nullptr) : json(cov.fraction(cov.with_citations))}};
  }

  StrengthMap matched;
  for (const auto& [k, s] : strengths) {
    if (corpus.interactions.contains(k)) matched[k] = s;
  }
  attach_strengths(corpus, matched);
  report["interactions"] = corpus.interactions.size();
  report["claims"] = corpus.claim_count();
  report["publications"] = corpus.publications.size();
  report["strengths"] = strengths.size();
  report["interactions_with_strength"] = matched.size();
  report["strengths_without_claims"] = strengths.size() - matched.size();

  const auto files = write_corpus_files(dir, out, corpus, matched);
  outputs.insert(outputs.end(), files.begin(), files.end());
  write_file(out / "ingest.json", report.dump(2) + "\n");
  outputs.push_back("ingest.json");
  std::cout << "ingest: " << corpus.interactions.size() << " interactions, " << corpus.claim_count() << " claims, "
            << matched.size() << " with strength\n";
  return outputs;
}

Outputs stage_partition(const CorpusPaths& paths, const PartitionConfig& cfg, const fs::path& out) {
  const auto in = load_inputs(paths);
  if (in.strengths.empty()) throw Error("no strengths to partition");
  const BetaPosterior prior{cfg.prior_a, cfg.prior_b};
  const ThresholdProblem problem(in.corpus, in.strengths, prior);

  Thresholds th;
  json diag = json::object();
  DistanceCurve neg, pos;
  if (cfg.mode == "optimize") {
    OptimizeOptions opt;
    opt.grid_step = cfg.grid_step;
    opt.prior = prior;
    opt.min_class_share = cfg.min_class_share;
    opt.max_iterations = cfg.max_iterations;
    const auto res = optimize_thresholds(problem, opt);
    th = res.thresholds;
    const auto& d = res.diagnostics;
    neg = d.negative_curve;
    pos = d.positive_curve;
    diag = {{"delta_minus", d.delta_minus},     {"delta_plus", d.delta_plus},
            {"product", d.product},             {"iterations", d.iterations},
            {"converged", d.converged},         {"weak_structure", d.weak_structure},
            {"neutral_uses_polarity", d.neutral_uses_polarity}};
  } else {
    if (cfg.mode == "percentile") {
      th = percentile_thresholds(in.strengths, cfg.epsilon);
    } else if (cfg.mode == "fixed") {
      th = Thresholds{cfg.theta_minus, cfg.theta_plus};
      th.validate();
    } else {
      throw Error("unknown partition mode '" + cfg.mode + "' (optimize|percentile|fixed)");
    }
    neg = scan_thresholds(problem, MovingThreshold::Minus, cfg.grid_step, th.theta_plus);
    pos = scan_thresholds(problem, MovingThreshold::Plus, cfg.grid_step, th.theta_minus);
    diag["neutral_uses_polarity"] = true;
  }

  const auto labels = partition_classes(in.strengths, th);
  std::map<std::string, std::size_t> n_int, n_claims;
  for (const auto& [k, c] : labels) {
    ++n_int[to_string(c)];
    n_claims[to_string(c)] += in.corpus.at(k).claims.size();
  }
  const json j = {{"mode", cfg.mode},
                  {"theta_minus", th.theta_minus},
                  {"theta_plus", th.theta_plus},
                  {"upper_cut", th.upper_cut()},
                  {"grid_step", cfg.grid_step},
                  {"prior", {cfg.prior_a, cfg.prior_b}},
                  {"diagnostics", diag},
                  {"interactions", n_int},
                  {"claims", n_claims}};
  write_file(out / "thresholds.json", j.dump(2) + "\n");
  write_with(out / "curves" / "negative.csv", [&](std::ostream& o) { write_curve_csv(o, curve_rows(neg)); });
  write_with(out / "curves" / "positive.csv", [&](std::ostream& o) { write_curve_csv(o, curve_rows(pos)); });
  write_with(out / "classes.tsv", [&](std::ostream& o) {
    o << "source\ttarget\tstrength\tclass\n";
    for (const auto& [k, c] : labels) {
      o << k.source.str() << '\t' << k.target.str() << '\t' << text::fmt(in.strengths.at(k)) << '\t' << to_string(c)
        << '\n';
    }
  });
  std::cout << "partition: theta- = " << text::fmt(th.theta_minus) << ", theta+ = " << text::fmt(th.theta_plus)
            << " (" << cfg.mode << ")\n";
  return {"thresholds.json", "curves/negative.csv", "curves/positive.csv", "classes.tsv"};
}

/// One row per (interaction, year) batch holding the batch-level columns of the claim table.
FeatureTable batch_table(const FeatureTable& claims) {
  static const std::set<std::string> batch_families{"NW", "NHI", "CDEP", "BDEP", "CCN", "CSI", "CSA"};
  std::set<std::string> drop;
  for (const auto& n : claims.names) {
    const auto f = feature_family(n);
    if (!batch_families.contains(f)) drop.insert(f);
  }
  auto t = claims.without_families(drop);
  std::set<std::pair<InteractionKey, int>> seen;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (seen.insert({t.interaction[i], t.year[i]}).second) idx.push_back(i);
  }
  auto out = t.subset(idx);
  out.publication.assign(out.size(), PublicationId());
  return out;
}

Outputs stage_features(const CorpusPaths& paths, const FeatureConfig& cfg, std::uint64_t seed,
                       const std::string& level, const fs::path& out) {
  const auto in = load_inputs(paths);
  const FeatureContext ctx(in.corpus, cfg.options(seed));
  std::vector<InteractionKey> keys;
  for (const auto& [k, r] : in.corpus.interactions) keys.push_back(k);
  Outputs outputs;
  if (level == "interaction" || level == "all") {
    const auto t = interaction_features(ctx, keys);
    write_with(out / "features" / "interactions.tsv", [&](std::ostream& o) { write_feature_table(o, t); });
    outputs.push_back("features/interactions.tsv");
  }
  if (level == "claim" || level == "batch" || level == "all") {
    const auto t = claim_features(ctx, keys);
    if (level != "batch") {
      write_with(out / "features" / "claims.tsv", [&](std::ostream& o) { write_feature_table(o, t); });
      outputs.push_back("features/claims.tsv");
    } else {
      write_with(out / "features" / "batches.tsv", [&](std::ostream& o) { write_feature_table(o, batch_table(t)); });
      outputs.push_back("features/batches.tsv");
    }
  }
  if (outputs.empty()) throw Error("unknown feature level '" + level + "' (interaction|claim|batch|all)");
  std::cout << "features: " << keys.size() << " interactions, " << in.corpus.claim_count() << " claims\n";
  return outputs;
}

struct LabeledData {
  ClaimCorpus corpus;
  LabelMap labels;
  FeatureTable interactions, claims;
};

LabeledData load_labeled(const CorpusPaths& paths, const fs::path& features_dir, const fs::path& labels_path) {
  LabeledData d;
  d.corpus = load_inputs(paths).corpus;
  d.labels = read_labels(labels_path);
  d.interactions = labeled_rows(load_table(features_dir / "interactions.tsv"), d.labels);
  const auto claims = features_dir / "claims.tsv";
  if (fs::exists(claims)) d.claims = labeled_rows(load_table(claims), d.labels);
  if (d.interactions.size() == 0) throw Error("no labeled interactions in " + (features_dir / "interactions.tsv").string());
  return d;
}

Outputs stage_train(const LabeledData& d, const std::vector<Task>& tasks, const ModelConfig& mcfg,
                    std::uint64_t seed, const fs::path& out) {
  const auto opt = mcfg.options(seed);
  Outputs outputs;
  for (const auto task : tasks) {
    json models = json::object();
    auto fit = [&](const std::string& name, const FeatureTable& t, const std::vector<std::size_t>& rows,
                   const std::vector<int>& y, std::uint64_t stream) {
      if (!detail::both_classes(y)) throw Error(std::string("task ") + to_string(task) + ": " + name +
                                                " training rows hold a single class");
      const auto m = detail::train_model(t.subset(rows).matrix(), y, opt, derive_seed(opt.seed, stream));
      models[name] = {{"rows", rows.size()}, {"features", t.names}, {"model", m.dump()}};
    };
    const auto& IT = d.interactions;
    std::vector<std::size_t> all(IT.size());
    std::iota(all.begin(), all.end(), 0);
    if (task != Task::ClaimCorrectness) {
      std::vector<int> y;
      for (auto i : all) y.push_back(is_neutral(d.labels.at(IT.interaction[i])) ? 1 : 0);
      fit("neutral", IT, all, y, 1);
    }
    if (task == Task::PositiveDirect) {
      std::vector<std::size_t> rows;
      std::vector<int> y;
      for (auto i : all) {
        const auto c = d.labels.at(IT.interaction[i]);
        if (is_neutral(c)) continue;
        rows.push_back(i);
        y.push_back(positive_indicator(c));
      }
      fit("positive", IT, rows, y, 2);
    }
    if (task == Task::ClaimCorrectness || task == Task::PositiveBayes) {
      if (d.claims.size() == 0) throw Error(std::string("task ") + to_string(task) + " needs claim features");
      std::map<std::pair<InteractionKey, PublicationId>, int> polarity;
      for (const auto& [k, rec] : d.corpus.interactions) {
        for (const auto& c : rec.claims) polarity[{k, c.publication}] = c.polarity;
      }
      std::vector<std::size_t> rows;
      std::vector<int> y;
      for (std::size_t i = 0; i < d.claims.size(); ++i) {
        const auto c = d.labels.at(d.claims.interaction[i]);
        if (is_neutral(c)) continue;
        rows.push_back(i);
        y.push_back(claim_correctness(polarity.at({d.claims.interaction[i], d.claims.publication[i]}),
                                      positive_indicator(c)));
      }
      fit("claim_correctness", d.claims, rows, y, 3);
    }
    const json j = {{"task", to_string(task)}, {"model_kind", to_string(opt.model)}, {"models", models}};
    const std::string rel = std::string("models/") + to_string(task) + ".json";
    write_file(out / rel, j.dump(1) + "\n");
    outputs.push_back(rel);
    std::cout << "train: " << to_string(task) << " -> " << rel << "\n";
  }
  return outputs;
}

FoldPlan make_plan(const LabeledData& d, const std::string& split, int repeats, int folds, std::uint64_t seed) {
  const auto keys = unique_keys(d.interactions);
  if (split == "grouped") return grouped_kfold(keys, repeats, folds, seed);
  if (split == "popularity") return popularity_kfold(d.corpus, keys, repeats, folds, seed);
  throw Error("unknown split '" + split + "' (grouped|popularity)");
}

EvalInputs eval_inputs(const LabeledData& d) {
  EvalInputs in;
  in.corpus = &d.corpus;
  in.labels = d.labels;
  in.interactions = d.interactions;
  in.claims = d.claims;
  return in;
}

Outputs stage_evaluate(const LabeledData& d, const EvalConfig& cfg, const ModelConfig& mcfg, std::uint64_t seed,
                       const fs::path& out) {
  const auto plan = make_plan(d, cfg.split, cfg.repeats, cfg.folds, derive_seed(seed, 4));
  const auto opt = mcfg.options(seed);
  const auto in = eval_inputs(d);
  json reports = json::array();
  std::ostringstream samples;
  write_auc_samples_header(samples);
  for (const auto task : cfg.task_list()) {
    const auto rep = evaluate(in, task, plan, opt);
    reports.push_back(rep.to_json());
    write_auc_samples_csv(samples, rep);
    std::cout << "evaluate: " << to_string(task) << " AUC " << text::fmt(rep.auc.mean) << " over "
              << rep.auc_samples.size() << " folds";
    if (!rep.flags.empty()) std::cout << " (" << rep.flags.size() << " flagged)";
    std::cout << "\n";
  }
  const json j = {{"split", cfg.split},     {"repeats", cfg.repeats},   {"folds", cfg.folds},
                  {"labels", cfg.labels},   {"model", mcfg.to_json()},  {"tasks", reports}};
  write_file(out / "eval.json", j.dump(2) + "\n");
  write_file(out / "auc_samples.csv", samples.str());
  return {"eval.json", "auc_samples.csv"};
}

Outputs stage_policy(const LabeledData& d, const PolicyConfig& cfg, const FeatureConfig& fcfg,
                     const ModelConfig& mcfg, std::uint64_t seed, const fs::path& out) {
  if (cfg.betas < 1) throw Error("policy needs at least one slope");
  const auto task = parse_task(cfg.task);
  const auto opt = mcfg.options(seed);
  const auto fopt = fcfg.options(seed);
  const auto sub = restrict_corpus(d.corpus, d.labels);
  const auto range = resample_range(sub);
  const auto cache = publication_cache(sub, fopt);

  std::vector<PolicyRow> rows;
  json targets = json::array();
  for (int i = 0; i < cfg.betas; ++i) {
    const double target =
        cfg.betas == 1 ? range.beta_min
                       : range.beta_min + (range.beta_max - range.beta_min) * i / static_cast<double>(cfg.betas - 1);
    double achieved = kMissing;
    ClaimCorpus resampled;
    try {
      resampled =
          policy_resample_lengths(sub, target, derive_seed(seed, 100 + static_cast<std::uint64_t>(i)), &achieved);
    } catch (const Error& e) {
      // Small corpora move in discrete steps; an unmatched slope leaves a gap, not a failure.
      std::cerr << "warning: policy: " << e.what() << "; slope skipped\n";
      rows.push_back(PolicyRow{target});
      targets.push_back({{"target", target}, {"achieved", nullptr}, {"error", e.what()}});
      continue;
    }
    const FeatureContext ctx(resampled, fopt, &cache);
    std::vector<InteractionKey> keys;
    for (const auto& [k, r] : resampled.interactions) keys.push_back(k);
    EvalInputs in;
    in.corpus = &resampled;
    in.labels = d.labels;
    in.interactions = interaction_features(ctx, keys);
    if (task == Task::PositiveBayes || task == Task::ClaimCorrectness) in.claims = claim_features(ctx, keys);
    const auto rep = evaluate(in, task, grouped_kfold(keys, cfg.repeats, cfg.folds, derive_seed(seed, 5)), opt);
    rows.push_back(policy_row(achieved, rep));
    targets.push_back({{"target", target}, {"achieved", achieved}, {"flags", rep.flags.size()}});
    std::cout << "policy: beta " << text::fmt(achieved) << " AUC " << text::fmt(rep.auc.mean) << " IG "
              << text::fmt(rep.ig.mean) << "\n";
  }
  write_with(out / "policy.csv", [&](std::ostream& o) { write_policy_csv(o, rows); });
  write_file(out / "plots" / "policy_auc.svg", policy_svg(rows, false));
  write_file(out / "plots" / "policy_ig.svg", policy_svg(rows, true));
  Outputs outputs{"policy.csv", "plots/policy_auc.svg", "plots/policy_ig.svg"};

  json summary = {{"task", cfg.task},
                  {"slopes", targets},
                  {"achievable", {{"beta_min", range.beta_min}, {"beta_max", range.beta_max}}}};
  if (cfg.community) {
    const auto ctask = parse_task(cfg.community_task);
    const auto rep =
        evaluate(eval_inputs(d), ctask, grouped_kfold(unique_keys(d.interactions), cfg.repeats, cfg.folds,
                                                      derive_seed(seed, 6)),
                 opt);
    const auto ccn = interaction_ccn(d.corpus, unique_keys(d.interactions), fopt.seed);
    const auto cp = community_policy(rep, ccn);
    auto ci = [](const MeanCI& c) { return json{{"mean", c.mean}, {"ci_low", c.low}, {"ci_high", c.high}}; };
    summary["community"] = {{"task", cfg.community_task},
                            {"ccn_threshold", cp.threshold},
                            {"auc_low_ccn", ci(cp.low)},
                            {"auc_high_ccn", ci(cp.high)},
                            {"samples", cp.auc_low.size()},
                            {"flags", cp.flags}};
    std::cout << "policy: community split at CCN " << text::fmt(cp.threshold) << ", AUC low "
              << text::fmt(cp.low.mean) << ", high " << text::fmt(cp.high.mean) << "\n";
  }
  write_file(out / "policy.json", summary.dump(2) + "\n");
  outputs.push_back("policy.json");
  return outputs;
}

Outputs stage_report(const fs::path& in_dir, const fs::path& out) {
  Outputs outputs;
  json ev;
  try {
    ev = json::parse(read_file(in_dir / "eval.json"));
  } catch (const json::exception& e) {
    throw Error((in_dir / "eval.json").string() + ": " + e.what());
  }
  std::vector<SummaryRow> summary;
  std::vector<std::pair<std::string, std::vector<double>>> samples;
  for (const auto& t : ev.at("tasks")) {
    const auto task = t.at("task").get<std::string>();
    const auto kind = t.at("model_kind").get<std::string>();
    std::vector<double> auc, ig;
    for (const auto& v : t.at("auc_samples")) auc.push_back(num_or_missing(v));
    for (const auto& v : t.at("ig_samples")) ig.push_back(num_or_missing(v));
    summary.push_back(summarize(task + " AUC", auc));
    summary.push_back(summarize(task + " IG", ig));
    samples.emplace_back(task, auc);

    std::map<std::string, FamilyStat> fam;
    for (const auto& [f, s] : t.at("families").items()) {
      fam[f] = {num_or_missing(s.at("mean")), num_or_missing(s.at("ci_low")), num_or_missing(s.at("ci_high")), 0};
    }
    const auto rel_csv = "report/importance_" + svg_name(task) + ".csv";
    write_with(out / rel_csv, [&](std::ostream& o) { write_importance_csv(o, fam, kind); });
    const auto rel_svg = "plots/importance_" + svg_name(task) + ".svg";
    write_file(out / rel_svg, importance_svg(fam, "Feature family importance: " + task + " (" + kind + ")"));
    outputs.push_back(rel_csv);
    outputs.push_back(rel_svg);
  }
  write_with(out / "report" / "auc_summary.csv", [&](std::ostream& o) { write_summary_csv(o, summary); });
  write_file(out / "plots" / "auc.svg", auc_distribution_svg(samples));
  outputs.push_back("report/auc_summary.csv");
  outputs.push_back("plots/auc.svg");

  const auto neg = in_dir / "curves" / "negative.csv", pos = in_dir / "curves" / "positive.csv";
  if (fs::exists(neg) && fs::exists(pos) && fs::exists(in_dir / "thresholds.json")) {
    auto a = open_input(neg.string());
    auto b = open_input(pos.string());
    const auto th = json::parse(read_file(in_dir / "thresholds.json"));
    const Thresholds chosen{th.at("theta_minus").get<double>(), th.at("theta_plus").get<double>()};
    write_file(out / "plots" / "curves.svg",
               curve_svg(read_curve_csv(a, neg.string()), read_curve_csv(b, pos.string()), chosen));
    outputs.push_back("plots/curves.svg");
  }
  std::cout << "report: " << outputs.size() << " files\n";
  return outputs;
}

// Stage cache -----------------------------------------------------------------------

struct StageSpec {
  std::string name;
  json params;
  std::vector<std::pair<std::string, fs::path>> inputs;  // logical name, path
  std::function<Outputs()> compute;
};

/// Runs a stage unless .cache/<stage>.json records the same input key and every
/// recorded output still has its recorded hash.
void run_stage(const fs::path& out, const StageSpec& s) {
  json key_doc = {{"stage", s.name}, {"params", s.params}, {"inputs", json::object()}};
  for (const auto& [name, path] : s.inputs) key_doc["inputs"][name] = sha256_file(path);
  const std::string key = sha256(key_doc.dump());
  const fs::path cache_path = out / ".cache" / (s.name + ".json");

  if (fs::exists(cache_path)) {
    try {
      const auto c = json::parse(read_file(cache_path));
      bool hit = c.at("key").get<std::string>() == key;
      for (const auto& [rel, hash] : c.at("outputs").items()) {
        if (!hit) break;
        hit = fs::exists(out / rel) && sha256_file(out / rel) == hash.get<std::string>();
      }
      if (hit) {
        std::cout << "stage " << s.name << ": cached\n";
        return;
      }
    } catch (const std::exception& e) {
      std::cerr << "warning: stage " << s.name << ": unreadable cache file " << cache_path.string() << " ("
                << e.what() << "); recomputing\n";
    }
  }

  std::cout << "stage " << s.name << ": running\n";
  Outputs outputs;
  try {
    outputs = s.compute();
  } catch (const Error& e) {
    throw Error("stage " + s.name + " failed: " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + s.name + " failed: " + e.what());
  }
  json record = {{"stage", s.name}, {"key", key}, {"outputs", json::object()}};
  for (const auto& rel : outputs) record["outputs"][rel] = sha256_file(out / rel);
  write_file(cache_path, record.dump(2) + "\n");
}

void run_pipeline(const PipelineConfig& c) {
  const fs::path& out = c.out;
  fs::create_directories(out);
  const auto corpus = CorpusPaths::in(out / "corpus");
  auto corpus_inputs = [&] {
    return std::vector<std::pair<std::string, fs::path>>{
        {"claims", corpus.claims}, {"publications", corpus.publications}, {"strengths", corpus.strengths}};
  };
  fs::path labels_path;
  if (c.eval.labels == "partition") {
    labels_path = out / "classes.tsv";
  } else if (c.eval.labels == "truth") {
    if (c.input.synth.empty()) throw Error("evaluate.labels = truth needs a synthetic input");
    labels_path = out / "corpus" / "truth.tsv";
  } else {
    throw Error("evaluate.labels must be partition or truth");
  }
  const auto tasks = c.eval.task_list();
  auto model_inputs = [&] {
    auto v = corpus_inputs();
    v.emplace_back("labels", labels_path);
    v.emplace_back("interaction_features", out / "features" / "interactions.tsv");
    v.emplace_back("claim_features", out / "features" / "claims.tsv");
    return v;
  };
  auto labeled = [&] { return load_labeled(corpus, out / "features", labels_path); };

  // ingest
  {
    StageSpec s{"ingest", c.input.to_json(), {}, [&] { return stage_ingest(c.input, out); }};
    for (const auto& [name, p] : std::vector<std::pair<std::string, fs::path>>{
             {"synth", c.input.synth},           {"claims", c.input.claims},
             {"publications", c.input.publications}, {"strengths", c.input.strengths},
             {"journals", c.input.journals},     {"affiliations", c.input.affiliations},
             {"citations", c.input.citations}}) {
      if (p.empty()) continue;
      if (!fs::exists(p)) throw Error("stage ingest failed: input " + name + " not found: " + p.string());
      s.inputs.emplace_back(name, p);
    }
    run_stage(out, s);
  }
  run_stage(out, {"partition", c.partition.to_json(), corpus_inputs(),
                  [&] { return stage_partition(corpus, c.partition, out); }});
  run_stage(out, {"features", {{"features", c.features.to_json()}, {"seed", c.seed}}, corpus_inputs(),
                  [&] { return stage_features(corpus, c.features, c.seed, "all", out); }});
  run_stage(out, {"train",
                  {{"model", c.model.to_json()}, {"tasks", c.eval.tasks}, {"seed", c.seed}},
                  model_inputs(),
                  [&] { return stage_train(labeled(), tasks, c.model, c.seed, out); }});
  run_stage(out, {"evaluate",
                  {{"model", c.model.to_json()}, {"evaluate", c.eval.to_json()}, {"seed", c.seed}},
                  model_inputs(),
                  [&] { return stage_evaluate(labeled(), c.eval, c.model, c.seed, out); }});
  if (c.policy.enabled) {
    run_stage(out, {"policy",
                    {{"policy", c.policy.to_json()},
                     {"features", c.features.to_json()},
                     {"model", c.model.to_json()},
                     {"seed", c.seed}},
                    model_inputs(),
                    [&] { return stage_policy(labeled(), c.policy, c.features, c.model, c.seed, out); }});
  } else {
    std::cout << "stage policy: disabled\n";
  }
  run_stage(out, {"report",
                  json::object(),
                  {{"eval", out / "eval.json"},
                   {"thresholds", out / "thresholds.json"},
                   {"negative_curve", out / "curves" / "negative.csv"},
                   {"positive_curve", out / "curves" / "positive.csv"}},
                  [&] { return stage_report(out, out); }});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claimcal: calibrate published claim networks against experimental outcomes"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  std::optional<std::uint64_t> seed;
  std::string out = "out";
  unsigned threads = 0;
  app.add_option("--seed", seed, "Random seed (default 1; run: overrides run.seed)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto seed_or = [&](std::uint64_t d) { return seed.value_or(d); };

  // Shared input options.
  std::string corpus_dir, features_dir, labels_file;
  auto add_corpus = [&](CLI::App* s) {
    s->add_option("--corpus", corpus_dir, "Directory with claims.tsv, publications.jsonl, strengths.tsv (default <out>/corpus)");
  };
  auto add_labeled = [&](CLI::App* s) {
    add_corpus(s);
    s->add_option("--features", features_dir, "Directory with interactions.tsv and claims.tsv (default <out>/features)");
    s->add_option("--labels", labels_file, "Class TSV with source, target, class columns (default <out>/classes.tsv)");
  };
  auto corpus_paths = [&] { return CorpusPaths::in(corpus_dir.empty() ? fs::path(out) / "corpus" : fs::path(corpus_dir)); };
  auto labeled = [&] {
    return load_labeled(corpus_paths(), features_dir.empty() ? fs::path(out) / "features" : fs::path(features_dir),
                        labels_file.empty() ? fs::path(out) / "classes.tsv" : fs::path(labels_file));
  };

  std::string synth_config;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  synth->add_option("--config", synth_config, "Generator JSON config")->required()->check(CLI::ExistingFile);

  InputConfig input;
  std::string claims, pubs, strengths, journals, affiliations, citations;
  auto* ingest = app.add_subcommand("ingest", "Load, validate and normalize a claim corpus");
  ingest->add_option("--claims", claims, "Claims TSV (source target pmid year polarity)")->required();
  ingest->add_option("--publications", pubs, "Publications JSONL")->required();
  ingest->add_option("--strengths", strengths, "Strengths TSV (source target strength)")->required();
  ingest->add_option("--journals", journals, "Journal scores TSV (journal year score)");
  ingest->add_option("--affiliations", affiliations, "Affiliation ranks TSV (affiliation rank)");
  ingest->add_option("--citations", citations, "Citation histories TSV (pmid year count)");

  PartitionConfig pcfg;
  auto* partition = app.add_subcommand("partition", "Choose class thresholds and assign interaction classes");
  add_corpus(partition);
  partition->add_option("--mode", pcfg.mode, "optimize | percentile | fixed")
      ->check(CLI::IsMember({"optimize", "percentile", "fixed"}));
  partition->add_option("--epsilon", pcfg.epsilon, "Tail share per class in percentile mode");
  partition->add_option("--theta-minus", pcfg.theta_minus, "theta- in fixed mode");
  partition->add_option("--theta-plus", pcfg.theta_plus, "theta+ in fixed mode");
  partition->add_option("--grid-step", pcfg.grid_step, "Threshold grid step");
  partition->add_option("--prior-a", pcfg.prior_a, "Beta prior a");
  partition->add_option("--prior-b", pcfg.prior_b, "Beta prior b");
  partition->add_option("--min-class-share", pcfg.min_class_share, "Minimum claim share per class");

  FeatureConfig fcfg;
  std::string level = "all";
  auto* features = app.add_subcommand("features", "Compute interaction and claim feature tables");
  add_corpus(features);
  features->add_option("--level", level, "interaction | claim | batch | all")
      ->check(CLI::IsMember({"interaction", "claim", "batch", "all"}));
  features->add_option("--network", fcfg.network, "Gene-network features");
  features->add_option("--bipartite", fcfg.bipartite, "Bipartite dependence features");
  features->add_option("--citations", fcfg.citations, "Citation-curve features");
  features->add_option("--windows", fcfg.windows, "Comma-separated look-back windows in years, or inf");
  features->add_option("--lognormal", fcfg.lognormal, "Citation curve exponent: as_printed | standard");

  ModelConfig mcfg;
  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", mcfg.kind, "forest | logit")->check(CLI::IsMember({"forest", "logit"}));
    s->add_option("--trees", mcfg.trees, "Forest size");
    s->add_option("--depth", mcfg.depth, "Tree depth");
    s->add_option("--min-leaf", mcfg.min_leaf, "Minimum leaf share of training rows");
    s->add_option("--nonzeros", mcfg.nonzeros, "Nonzero logit coefficients");
  };
  EvalConfig ecfg;
  auto* train = app.add_subcommand("train", "Fit the models of each task on all labeled rows");
  add_labeled(train);
  add_model(train);
  train->add_option("--tasks", ecfg.tasks, "Comma-separated tasks");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Cross-validated AUC and information gain");
  add_labeled(evaluate_cmd);
  add_model(evaluate_cmd);
  evaluate_cmd->add_option("--tasks", ecfg.tasks, "neutral, positive_direct, positive_bayes, claim_correctness");
  evaluate_cmd->add_option("--repeats", ecfg.repeats, "Fold plan repeats");
  evaluate_cmd->add_option("--folds", ecfg.folds, "Folds per repeat");
  evaluate_cmd->add_option("--split", ecfg.split, "grouped | popularity")
      ->check(CLI::IsMember({"grouped", "popularity"}));

  PolicyConfig pol;
  auto* policy = app.add_subcommand("policy", "Evaluate under resampled claim-count slopes and community splits");
  add_labeled(policy);
  add_model(policy);
  policy->add_option("--task", pol.task, "Task evaluated at each slope");
  policy->add_option("--betas", pol.betas, "Number of slopes across the achievable range");
  policy->add_option("--repeats", pol.repeats, "Fold plan repeats");
  policy->add_option("--folds", pol.folds, "Folds per repeat");
  policy->add_option("--community", pol.community, "Also split test folds by author community count");
  policy->add_option("--community-task", pol.community_task, "Task used for the community split");
  policy->add_option("--windows", fcfg.windows, "Feature windows, as for features");
  policy->add_option("--citations", fcfg.citations, "Citation-curve features");

  std::string report_in;
  auto* report = app.add_subcommand("report", "Render summary tables and plots from evaluation outputs");
  report->add_option("--in", report_in, "Directory holding eval.json and curves/ (default <out>)");

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run every stage from an INI config, reusing cached stages");
  run->add_option("--config", run_config, "Pipeline INI file")->required()->check(CLI::ExistingFile);
  run->footer(config_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    thread_setting() = threads;
    const fs::path o(out);
    if (*synth) {
      stage_synth(synth_config, seed, o);
    } else if (*ingest) {
      input.claims = claims;
      input.publications = pubs;
      input.strengths = strengths;
      input.journals = journals;
      input.affiliations = affiliations;
      input.citations = citations;
      stage_ingest(input, o);
    } else if (*partition) {
      stage_partition(corpus_paths(), pcfg, o);
    } else if (*features) {
      stage_features(corpus_paths(), fcfg, seed_or(1), level, o);
    } else if (*train) {
      stage_train(labeled(), ecfg.task_list(), mcfg, seed_or(1), o);
    } else if (*evaluate_cmd) {
      stage_evaluate(labeled(), ecfg, mcfg, seed_or(1), o);
    } else if (*policy) {
      stage_policy(labeled(), pol, fcfg, mcfg, seed_or(1), o);
    } else if (*report) {
      stage_report(report_in.empty() ? o : fs::path(report_in), o);
    } else if (*run) {
      auto cfg = load_pipeline_config(run_config);
      if (seed) cfg.seed = *seed;
      if (app.get_option("--out")->count() > 0) cfg.out = o;
      if (app.get_option("--threads")->count() > 0) cfg.threads = threads;
      thread_setting() = cfg.threads;
      run_pipeline(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
