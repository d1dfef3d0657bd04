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

// Classifiers and scoring: shallow random forests, L1 logistic regression,
// ROC AUC, hierarchical/Bayesian composition and family importances.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "claimcal/common.hpp"
#include "json.hpp"

namespace claimcal {

/// Dense design matrix; rows are samples, columns follow `names`.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  std::size_t n() const { return rows.size(); }
  std::size_t p() const { return names.size(); }

  std::size_t column_index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("unknown feature " + name);
    return static_cast<std::size_t>(it - names.begin());
  }

  FeatureMatrix subset(const std::vector<std::size_t>& idx) const {
    FeatureMatrix m;
    m.names = names;
    m.rows.reserve(idx.size());
    for (auto i : idx) m.rows.push_back(rows.at(i));
    return m;
  }
};

/// Feature name -> family name.
using FamilyMap = std::map<std::string, std::string>;

struct FeatureVector {
  std::map<std::string, double> values;
};

inline void check_labels(const std::vector<int>& y) {
  bool zero = false, one = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error("labels must be 0 or 1");
    zero |= v == 0;
    one |= v == 1;
  }
  if (!(zero && one)) throw Error("both classes must be present");
}

// Forest --------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;   // class-1 fraction of the (bootstrap) samples reaching the node
  double weight = 0.0;  // sample count reaching the node
  double impurity = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
      i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
  }

  int depth() const {
    auto rec = [&](auto&& self, int i) -> int {
      if (nodes[i].feature < 0) return 0;
      return 1 + std::max(self(self, nodes[i].left), self(self, nodes[i].right));
    };
    return nodes.empty() ? 0 : rec(rec, 0);
  }
};

struct ForestOptions {
  int n_trees = 100;
  int max_depth = 2;
  double min_leaf_fraction = 0.02;
  bool bootstrap = true;
};

struct ForestModel {
  std::vector<std::string> feature_names;
  std::vector<DecisionTree> trees;
  ForestOptions options;
  std::size_t n_train = 0;
  std::size_t min_leaf = 0;
  std::vector<double> importances;  // normalized Gini importance per feature
};

namespace detail {

inline double gini(double w1, double w) {
  if (w <= 0.0) return 0.0;
  const double p = w1 / w;
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Grows one tree on integer bootstrap weights. `order[j]` is the training set
// sorted by feature j, shared across trees.
inline DecisionTree grow_tree(const FeatureMatrix& X, const std::vector<int>& y,
                              const std::vector<std::vector<std::size_t>>& order, const std::vector<double>& w,
                              std::size_t min_leaf, int max_depth, std::size_t mtry, Rng& rng,
                              std::vector<double>& importance) {
  const std::size_t n = X.n(), p = X.p();
  std::vector<int> node_of(n, 0);
  DecisionTree tree;
  double total = 0.0, total1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += w[i];
    total1 += w[i] * y[i];
  }
  tree.nodes.push_back({-1, 0.0, -1, -1, total1 / total, total, gini(total1, total)});

  struct Pending {
    int node;
    int depth;
  };
  std::vector<Pending> queue{{0, 0}};
  std::vector<std::size_t> features(p);
  std::iota(features.begin(), features.end(), 0);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto [id, depth] = queue[q];
    const TreeNode parent = tree.nodes[static_cast<std::size_t>(id)];
    if (depth >= max_depth || parent.impurity <= 0.0 || parent.weight < 2.0 * static_cast<double>(min_leaf)) continue;

    shuffle(features, rng);
    SplitChoice best;
    for (std::size_t k = 0; k < p; ++k) {
      // Past the first mtry candidates, keep looking only until a valid split exists.
      if (k >= mtry && best.feature >= 0) break;
      const std::size_t j = features[k];
      double wl = 0.0, wl1 = 0.0;
      double prev = 0.0;
      bool have_prev = false;
      for (auto i : order[j]) {
        if (node_of[i] != id || w[i] == 0.0) continue;
        const double x = X.rows[i][j];
        if (have_prev && x > prev && wl >= static_cast<double>(min_leaf) &&
            parent.weight - wl >= static_cast<double>(min_leaf)) {
          const double wr = parent.weight - wl, wr1 = parent.weight * parent.value - wl1;
          const double child = (wl * gini(wl1, wl) + wr * gini(wr1, wr)) / parent.weight;
          const double gain = parent.impurity - child;
          if (gain > 1e-12 && gain > best.gain + 1e-15) best = {static_cast<int>(j), 0.5 * (prev + x), gain};
        }
        wl += w[i];
        wl1 += w[i] * y[i];
        prev = x;
        have_prev = true;
      }
    }
    if (best.feature < 0) continue;

    double wl = 0.0, wl1 = 0.0, wr = 0.0, wr1 = 0.0;
    const int left = static_cast<int>(tree.nodes.size()), right = left + 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] != id) continue;
      if (X.rows[i][static_cast<std::size_t>(best.feature)] <= best.threshold) {
        node_of[i] = left;
        wl += w[i];
        wl1 += w[i] * y[i];
      } else {
        node_of[i] = right;
        wr += w[i];
        wr1 += w[i] * y[i];
      }
    }
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    importance[static_cast<std::size_t>(best.feature)] += parent.weight / total * best.gain;
    tree.nodes.push_back({-1, 0.0, -1, -1, wl1 / wl, wl, gini(wl1, wl)});
    tree.nodes.push_back({-1, 0.0, -1, -1, wr1 / wr, wr, gini(wr1, wr)});
    queue.push_back({left, depth + 1});
    queue.push_back({right, depth + 1});
  }
  return tree;
}

inline void check_finite(const FeatureMatrix& X) {
  for (const auto& r : X.rows) {
    if (r.size() != X.p()) throw Error("ragged feature matrix");
    for (double v : r) {
      if (!std::isfinite(v)) throw Error("feature matrix contains missing values; impute first");
    }
  }
}

}  // namespace detail

/// Bagged depth-limited CART ensemble with ceil(sqrt(p)) candidate features per split.
inline ForestModel train_forest(const FeatureMatrix& X, const std::vector<int>& y, std::uint64_t seed,
                                const ForestOptions& opt = {}) {
  if (X.n() != y.size()) throw Error("feature rows and labels differ in length");
  check_labels(y);
  if (X.n() < 50) throw Error("forest training needs at least 50 samples");
  if (X.p() == 0) throw Error("forest training needs at least one feature");
  detail::check_finite(X);

  const std::size_t n = X.n(), p = X.p();
  ForestModel m;
  m.feature_names = X.names;
  m.options = opt;
  m.n_train = n;
  m.min_leaf = static_cast<std::size_t>(std::ceil(opt.min_leaf_fraction * static_cast<double>(n) - 1e-9));
  m.min_leaf = std::max<std::size_t>(m.min_leaf, 1);
  const auto mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)) - 1e-9));

  std::vector<std::vector<std::size_t>> order(p, std::vector<std::size_t>(n));
  parallel_for(p, [&](std::size_t j) {
    std::iota(order[j].begin(), order[j].end(), 0);
    std::stable_sort(order[j].begin(), order[j].end(),
                     [&](auto a, auto b) { return X.rows[a][j] < X.rows[b][j]; });
  });

  m.trees.resize(static_cast<std::size_t>(opt.n_trees));
  std::vector<std::vector<double>> imp(m.trees.size(), std::vector<double>(p, 0.0));
  parallel_for(m.trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<double> w(n, opt.bootstrap ? 0.0 : 1.0);
    if (opt.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) w[uniform_index(rng, n)] += 1.0;
    }
    m.trees[t] = detail::grow_tree(X, y, order, w, m.min_leaf, opt.max_depth, mtry, rng, imp[t]);
  });

  // Per-tree normalization, average over trees, then renormalize.
  m.importances.assign(p, 0.0);
  for (auto& v : imp) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (s <= 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) m.importances[j] += v[j] / s;
  }
  const double s = std::accumulate(m.importances.begin(), m.importances.end(), 0.0);
  if (s > 0.0) {
    for (auto& v : m.importances) v /= s;
  }
  return m;
}

inline double predict_forest(const ForestModel& m, const std::vector<double>& x) {
  if (x.size() != m.feature_names.size()) throw Error("feature vector has the wrong width");
  if (m.trees.empty()) throw Error("empty forest");
  double s = 0.0;
  for (const auto& t : m.trees) s += t.predict(x);
  return s / static_cast<double>(m.trees.size());
}

/// Named lookup; every model feature must be present and names outside the model are rejected.
inline double predict_forest(const ForestModel& m, const FeatureVector& x) {
  for (const auto& [k, v] : x.values) {
    if (std::find(m.feature_names.begin(), m.feature_names.end(), k) == m.feature_names.end()) {
      throw Error("unknown feature " + k);
    }
  }
  std::vector<double> row;
  for (const auto& name : m.feature_names) {
    auto it = x.values.find(name);
    if (it == x.values.end()) throw Error("missing feature " + name);
    row.push_back(it->second);
  }
  return predict_forest(m, row);
}

inline std::vector<double> predict_forest(const ForestModel& m, const FeatureMatrix& X) {
  std::vector<std::size_t> cols;
  for (const auto& name : m.feature_names) cols.push_back(X.column_index(name));
  std::vector<double> out(X.n());
  for (std::size_t i = 0; i < X.n(); ++i) {
    std::vector<double> row(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) row[k] = X.rows[i][cols[k]];
    out[i] = predict_forest(m, row);
  }
  return out;
}

inline std::map<std::string, double> gini_importances(const ForestModel& m) {
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) out[m.feature_names[j]] = m.importances.at(j);
  return out;
}

inline nlohmann::json forest_to_json(const ForestModel& m) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : m.trees) {
    auto rec = [&](auto&& self, int i) -> json {
      const auto& nd = t.nodes[static_cast<std::size_t>(i)];
      if (nd.feature < 0) return json{{"leaf", nd.value}, {"n", nd.weight}};
      return json{{"feature", m.feature_names[static_cast<std::size_t>(nd.feature)]},
                  {"threshold", nd.threshold},
                  {"n", nd.weight},
                  {"left", self(self, nd.left)},
                  {"right", self(self, nd.right)}};
    };
    trees.push_back(rec(rec, 0));
  }
  return json{{"kind", "forest"},
              {"n_trees", m.trees.size()},
              {"max_depth", m.options.max_depth},
              {"min_leaf_fraction", m.options.min_leaf_fraction},
              {"min_leaf", m.min_leaf},
              {"n_train", m.n_train},
              {"features", m.feature_names},
              {"trees", trees}};
}

// L1 logistic regression ---------------------------------------------------------

struct Standardizer {
  std::vector<double> mean, sd;

  static Standardizer fit(const FeatureMatrix& X) {
    Standardizer s;
    const std::size_t p = X.p();
    s.mean.assign(p, 0.0);
    s.sd.assign(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> col(X.n());
      for (std::size_t i = 0; i < X.n(); ++i) col[i] = X.rows[i][j];
      s.mean[j] = stats::mean(col);
      const double sd = X.n() > 1 ? stats::sample_sd(col) : 0.0;
      s.sd[j] = sd > 0.0 ? sd : 1.0;  // constant columns stay at zero after centering
    }
    return s;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / sd[j];
    return z;
  }
};

struct LogitOptions {
  std::size_t target_nnz = 5;
  double tolerance = 1e-6;        // gradient-mapping norm at the returned solution
  double search_tolerance = 1e-4;  // looser solves while bisecting the penalty
  int max_iterations = 200000;
  int max_bisections = 80;
  double lambda_floor = 1e-4;  // search range [floor * lambda_max, lambda_max]
};

struct LogitModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;  // on the standardized scale
  double intercept = 0.0;
  double penalty = 0.0;
  Standardizer scaler;
  bool nnz_flag = false;  // true when the target count was skipped and the nearest lower count returned
  int iterations = 0;
  std::vector<double> objective_trace;

  std::size_t nnz() const {
    return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0.0; }));
  }

  std::map<std::string, double> weight_map() const {
    std::map<std::string, double> out;
    for (std::size_t j = 0; j < weights.size(); ++j) out[feature_names[j]] = weights[j];
    return out;
  }
};

namespace detail {

inline double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Standardized problem: Z is n x p, parameters are (b, w) with b unpenalized.
struct LogitProblem {
  std::vector<std::vector<double>> Z;
  std::vector<double> y;
  std::size_t n = 0, p = 0;
  double L = 1.0;  // Lipschitz constant of the smooth part's gradient

  void linear(const std::vector<double>& th, std::vector<double>& eta) const {
    eta.assign(n, th[0]);
    for (std::size_t i = 0; i < n; ++i) {
      double s = th[0];
      const auto& z = Z[i];
      for (std::size_t j = 0; j < p; ++j) s += z[j] * th[j + 1];
      eta[i] = s;
    }
  }

  double loss(const std::vector<double>& eta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += log1pexp(eta[i]) - y[i] * eta[i];
    return s / static_cast<double>(n);
  }

  void gradient(const std::vector<double>& eta, std::vector<double>& g) const {
    g.assign(p + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = sigmoid(eta[i]) - y[i];
      g[0] += r;
      const auto& z = Z[i];
      for (std::size_t j = 0; j < p; ++j) g[j + 1] += r * z[j];
    }
    for (auto& v : g) v /= static_cast<double>(n);
  }

  double penalty_of(const std::vector<double>& th, double lambda) const {
    double s = 0.0;
    for (std::size_t j = 1; j <= p; ++j) s += std::abs(th[j]);
    return lambda * s;
  }

  // Proximal step from v with gradient g.
  void prox(const std::vector<double>& v, const std::vector<double>& g, double lambda, std::vector<double>& out) const {
    out.resize(p + 1);
    out[0] = v[0] - g[0] / L;
    const double thr = lambda / L;
    for (std::size_t j = 1; j <= p; ++j) {
      const double u = v[j] - g[j] / L;
      out[j] = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
    }
  }
};

// Largest eigenvalue of [1 Z]^T [1 Z] / n by power iteration.
inline double lipschitz(const LogitProblem& P) {
  std::vector<double> v(P.p + 1, 1.0), eta, u;
  double lam = 1.0;
  for (int it = 0; it < 200; ++it) {
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    for (auto& x : v) x /= nv;
    P.linear(v, eta);
    u.assign(P.p + 1, 0.0);
    for (std::size_t i = 0; i < P.n; ++i) {
      u[0] += eta[i];
      for (std::size_t j = 0; j < P.p; ++j) u[j + 1] += eta[i] * P.Z[i][j];
    }
    double next = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) next += u[k] * v[k];
    next /= static_cast<double>(P.n);
    v = u;
    if (std::abs(next - lam) <= 1e-9 * std::max(1.0, next)) {
      lam = next;
      break;
    }
    lam = next;
  }
  return 1.0001 * lam;
}

struct SolveResult {
  std::vector<double> theta;
  int iterations = 0;
  std::vector<double> trace;
  double mapping_norm = 0.0;
  bool converged = false;
};

// Monotone FISTA (Beck & Teboulle) with constant step 1/L.
inline SolveResult solve_l1(const LogitProblem& P, double lambda, std::vector<double> x, double tol, int max_iter) {
  SolveResult r;
  std::vector<double> yk = x, z, g, eta, xprev;
  P.linear(x, eta);
  double fx = P.loss(eta) + P.penalty_of(x, lambda);
  r.trace.push_back(fx);
  double t = 1.0;
  for (int k = 1; k <= max_iter; ++k) {
    P.linear(yk, eta);
    P.gradient(eta, g);
    P.prox(yk, g, lambda, z);
    P.linear(z, eta);
    const double fz = P.loss(eta) + P.penalty_of(z, lambda);
    xprev = x;
    const bool take = fz <= fx;
    if (take) {
      x = z;
      fx = fz;
    }
    r.trace.push_back(fx);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j <= P.p; ++j) {
      yk[j] = x[j] + (t / tn) * (z[j] - x[j]) + ((t - 1.0) / tn) * (x[j] - xprev[j]);
    }
    t = tn;
    r.iterations = k;
    if (k % 5 == 0 || k == max_iter) {
      // Gradient mapping at the current iterate.
      std::vector<double> gx, px;
      P.linear(x, eta);
      P.gradient(eta, gx);
      P.prox(x, gx, lambda, px);
      double s = 0.0;
      for (std::size_t j = 0; j <= P.p; ++j) s += (x[j] - px[j]) * (x[j] - px[j]);
      r.mapping_norm = P.L * std::sqrt(s);
      if (r.mapping_norm <= tol) {
        r.converged = true;
        break;
      }
      if (k % 200 == 0) {
        // Restart momentum; keeps the monotone scheme from stalling on plateaus.
        t = 1.0;
        yk = x;
      }
    }
  }
  r.theta = std::move(x);
  return r;
}

inline std::size_t count_nnz(const std::vector<double>& th) {
  std::size_t c = 0;
  for (std::size_t j = 1; j < th.size(); ++j) c += th[j] != 0.0;
  return c;
}

}  // namespace detail

/// Fits at one fixed penalty on z-scored columns (statistics from X).
inline LogitModel train_logit_fixed(const FeatureMatrix& X, const std::vector<int>& y, double lambda,
                                    const LogitOptions& opt = {}) {
  if (X.n() != y.size()) throw Error("feature rows and labels differ in length");
  check_labels(y);
  detail::check_finite(X);
  LogitModel m;
  m.feature_names = X.names;
  m.scaler = Standardizer::fit(X);
  detail::LogitProblem P;
  P.n = X.n();
  P.p = X.p();
  for (std::size_t i = 0; i < P.n; ++i) {
    P.Z.push_back(m.scaler.apply(X.rows[i]));
    P.y.push_back(y[i]);
  }
  P.L = detail::lipschitz(P) / 4.0;
  std::vector<double> th(P.p + 1, 0.0);
  const double ybar = stats::mean(P.y);
  th[0] = std::log(ybar / (1.0 - ybar));
  auto r = detail::solve_l1(P, lambda, th, opt.tolerance, opt.max_iterations);
  if (!r.converged) {
    throw Error("logistic solve did not converge: gradient mapping " + text::fmt(r.mapping_norm) + " after " +
                std::to_string(r.iterations) + " iterations");
  }
  m.intercept = r.theta[0];
  m.weights.assign(r.theta.begin() + 1, r.theta.end());
  m.penalty = lambda;
  m.iterations = r.iterations;
  m.objective_trace = std::move(r.trace);
  return m;
}

/// Smallest penalty at which all feature weights vanish.
inline double logit_lambda_max(const FeatureMatrix& X, const std::vector<int>& y) {
  const auto sc = Standardizer::fit(X);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> g(X.p(), 0.0);
  for (std::size_t i = 0; i < X.n(); ++i) {
    const auto z = sc.apply(X.rows[i]);
    for (std::size_t j = 0; j < X.p(); ++j) g[j] += (ybar - y[i]) * z[j];
  }
  double mx = 0.0;
  for (double v : g) mx = std::max(mx, std::abs(v) / static_cast<double>(X.n()));
  return mx;
}

/// L1 logit whose penalty is bisected (in log scale) until exactly target_nnz
/// weights are nonzero. If that count is skipped, the model with the nearest
/// lower count is returned and flagged.
inline LogitModel train_logit_l1(const FeatureMatrix& X, const std::vector<int>& y, const LogitOptions& opt = {}) {
  if (X.n() != y.size()) throw Error("feature rows and labels differ in length");
  check_labels(y);
  detail::check_finite(X);
  const std::size_t target = opt.target_nnz;

  LogitModel base;
  base.feature_names = X.names;
  base.scaler = Standardizer::fit(X);
  detail::LogitProblem P;
  P.n = X.n();
  P.p = X.p();
  for (std::size_t i = 0; i < P.n; ++i) {
    P.Z.push_back(base.scaler.apply(X.rows[i]));
    P.y.push_back(y[i]);
  }
  P.L = detail::lipschitz(P) / 4.0;
  const double ybar = stats::mean(P.y);
  std::vector<double> th0(P.p + 1, 0.0);
  th0[0] = std::log(ybar / (1.0 - ybar));

  const double lmax = logit_lambda_max(X, y);
  auto finish = [&](const detail::SolveResult& r, double lambda, bool flag) {
    LogitModel m = base;
    m.intercept = r.theta[0];
    m.weights.assign(r.theta.begin() + 1, r.theta.end());
    m.penalty = lambda;
    m.nnz_flag = flag;
    m.iterations = r.iterations;
    m.objective_trace = r.trace;
    return m;
  };
  auto solve = [&](double lambda, const std::vector<double>& warm, double tol) {
    auto r = detail::solve_l1(P, lambda, warm, tol, opt.max_iterations);
    if (!r.converged) {
      throw Error("logistic solve did not converge at penalty " + text::fmt(lambda) + ": gradient mapping " +
                  text::fmt(r.mapping_norm) + " after " + std::to_string(r.iterations) + " iterations");
    }
    return r;
  };

  if (lmax <= 0.0 || target == 0) return finish(solve(std::max(lmax, 1e-12), th0, opt.tolerance), lmax, false);

  double lo = std::log(lmax * opt.lambda_floor), hi = std::log(lmax);
  auto r_lo = solve(std::exp(lo), th0, opt.search_tolerance);
  if (detail::count_nnz(r_lo.theta) < target) {
    // Even the smallest penalty in range activates fewer features than requested.
    auto r = solve(std::exp(lo), r_lo.theta, opt.tolerance);
    return finish(r, std::exp(lo), detail::count_nnz(r.theta) != target);
  }
  std::vector<double> warm_hi = th0;
  std::vector<double> best_below = th0;
  double best_below_lambda = lmax;
  for (int it = 0; it < opt.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto r = solve(std::exp(mid), warm_hi, opt.search_tolerance);
    const auto k = detail::count_nnz(r.theta);
    if (k == target) {
      auto fine = solve(std::exp(mid), r.theta, opt.tolerance);
      const auto kf = detail::count_nnz(fine.theta);
      if (kf == target) return finish(fine, std::exp(mid), false);
      if (kf > target) {
        lo = mid;
      } else {
        hi = mid;
        best_below = fine.theta;
        best_below_lambda = std::exp(mid);
      }
      continue;
    }
    if (k > target) {
      lo = mid;
    } else {
      hi = mid;
      warm_hi = r.theta;
      best_below = r.theta;
      best_below_lambda = std::exp(mid);
    }
    if (hi - lo < 1e-9) break;
  }
  auto r = solve(best_below_lambda, best_below, opt.tolerance);
  return finish(r, best_below_lambda, detail::count_nnz(r.theta) != target);
}

inline double predict_logit(const LogitModel& m, const std::vector<double>& x) {
  if (x.size() != m.weights.size()) throw Error("feature vector has the wrong width");
  const auto z = m.scaler.apply(x);
  double eta = m.intercept;
  for (std::size_t j = 0; j < z.size(); ++j) eta += m.weights[j] * z[j];
  return detail::sigmoid(eta);
}

inline std::vector<double> predict_logit(const LogitModel& m, const FeatureMatrix& X) {
  std::vector<std::size_t> cols;
  for (const auto& name : m.feature_names) cols.push_back(X.column_index(name));
  std::vector<double> out(X.n());
  for (std::size_t i = 0; i < X.n(); ++i) {
    std::vector<double> row(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) row[k] = X.rows[i][cols[k]];
    out[i] = predict_logit(m, row);
  }
  return out;
}

inline nlohmann::json logit_to_json(const LogitModel& m) {
  return nlohmann::json{{"kind", "logit_l1"},
                        {"penalty", m.penalty},
                        {"intercept", m.intercept},
                        {"nnz", m.nnz()},
                        {"nnz_flag", m.nnz_flag},
                        {"iterations", m.iterations},
                        {"weights", m.weight_map()}};
}

// Scoring and composition ---------------------------------------------------------

/// Mann-Whitney estimate of the ROC AUC; tied scores count one half.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  check_labels(labels);
  const auto r = stats::ranks(scores);
  double n1 = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      n1 += 1.0;
      rank_sum += r[i];
    }
  }
  const double n0 = static_cast<double>(labels.size()) - n1;
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

/// P(positive) = P(positive | non-neutral) * P(non-neutral).
inline double hierarchical_positive(double p_pos_given_nonneutral, double p_nonneutral) {
  if (p_pos_given_nonneutral < 0.0 || p_pos_given_nonneutral > 1.0 || p_nonneutral < 0.0 || p_nonneutral > 1.0) {
    throw Error("probabilities must lie in [0,1]");
  }
  return p_pos_given_nonneutral * p_nonneutral;
}

struct ClaimEvidence {
  int polarity = 1;  // c in {0,1}
  double q = 0.5;    // P(claim correct | its features)
};

/// Posterior P(positive) from independent claims, each a noisy report whose
/// correctness probability is q.
inline double bayes_aggregate(const std::vector<ClaimEvidence>& claims, double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw Error("prior must lie in (0,1)");
  double lo = std::log(prior) - std::log1p(-prior);
  for (const auto& c : claims) {
    if (c.q < 0.0 || c.q > 1.0) throw Error("claim correctness probability outside [0,1]");
    const double q = std::clamp(c.q, 1e-6, 1.0 - 1e-6);
    const double l = std::log(q) - std::log1p(-q);
    lo += c.polarity == 1 ? l : -l;
  }
  return detail::sigmoid(lo);
}

struct FamilyStat {
  double mean = kMissing;
  double ci_low = kMissing;
  double ci_high = kMissing;
  std::size_t samples = 0;
};

/// Sums importances (or signed coefficients) within each family per sample, then
/// reports the mean over samples with a normal-approximation 95% interval.
inline std::map<std::string, FamilyStat> family_importance(const std::vector<std::map<std::string, double>>& samples,
                                                           const FamilyMap& families) {
  std::map<std::string, std::vector<double>> per;
  for (const auto& s : samples) {
    std::map<std::string, double> sum;
    for (const auto& [f, fam] : families) sum[fam];  // families absent from a model still score 0
    for (const auto& [f, v] : s) {
      auto it = families.find(f);
      if (it == families.end()) throw Error("feature " + f + " has no family");
      sum[it->second] += v;
    }
    for (const auto& [fam, v] : sum) per[fam].push_back(v);
  }
  std::map<std::string, FamilyStat> out;
  for (const auto& [fam, v] : per) {
    FamilyStat st;
    st.samples = v.size();
    st.mean = stats::mean(v);
    if (v.size() >= 2) {
      const double half = 1.959963984540054 * stats::sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
      st.ci_low = st.mean - half;
      st.ci_high = st.mean + half;
    }
    out[fam] = st;
  }
  return out;
}

}  // namespace claimcal
