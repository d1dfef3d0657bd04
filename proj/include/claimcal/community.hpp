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

// Community detection on small weighted graphs: a greedy two-level map-equation
// optimizer and asynchronous label propagation.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimcal/common.hpp"

namespace claimcal {

/// Adjacency-list graph over nodes 0..n-1. Parallel edges are summed on insert.
class IndexGraph {
 public:
  explicit IndexGraph(std::size_t n = 0) : out_(n), in_(n) {}

  std::size_t size() const noexcept { return out_.size(); }

  void add_edge(std::size_t from, std::size_t to, double w) {
    if (from >= size() || to >= size()) throw Error("edge endpoint out of range");
    if (!(w > 0.0)) throw Error("edge weight must be positive");
    add_to(out_[from], to, w);
    add_to(in_[to], from, w);
  }

  const std::vector<std::pair<std::size_t, double>>& out(std::size_t v) const { return out_[v]; }
  const std::vector<std::pair<std::size_t, double>>& in(std::size_t v) const { return in_[v]; }

  /// Undirected copy: w(u,v) = w(u->v) + w(v->u); a self-loop is kept once.
  IndexGraph symmetrized() const {
    IndexGraph g(size());
    for (std::size_t u = 0; u < size(); ++u) {
      for (const auto& [v, w] : out_[u]) {
        g.add_to(g.out_[u], v, w);
        if (v != u) g.add_to(g.out_[v], u, w);
      }
    }
    g.in_ = g.out_;
    return g;
  }

  IndexGraph unweighted() const {
    IndexGraph g(size());
    for (std::size_t u = 0; u < size(); ++u) {
      for (const auto& [v, w] : out_[u]) g.add_edge(u, v, 1.0);
    }
    return g;
  }

 private:
  static void add_to(std::vector<std::pair<std::size_t, double>>& adj, std::size_t v, double w) {
    for (auto& e : adj) {
      if (e.first == v) {
        e.second += w;
        return;
      }
    }
    adj.emplace_back(v, w);
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> out_, in_;
};

/// Renumbers labels to 0..k-1 in order of first appearance.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

/// Stationary node visit rates and edge flows that feed the map equation.
/// Undirected graphs use strength / total strength with no teleportation.
/// Directed graphs use PageRank with teleportation rate tau; dangling nodes
/// teleport with probability 1.
struct FlowModel {
  std::size_t n = 0;
  bool directed = false;
  double tau = 0.15;
  std::vector<double> visit;     // p_alpha
  std::vector<double> teleport;  // p_alpha * (probability of teleporting out of alpha)
  std::vector<std::vector<std::pair<std::size_t, double>>> flow_out, flow_in;  // link flows
};

inline FlowModel make_flow(const IndexGraph& g, bool directed, double tau = 0.15) {
  FlowModel f;
  f.n = g.size();
  f.directed = directed;
  f.tau = tau;
  f.visit.assign(f.n, 0.0);
  f.teleport.assign(f.n, 0.0);
  f.flow_out.assign(f.n, {});
  f.flow_in.assign(f.n, {});
  if (f.n == 0) return f;
  std::vector<double> strength(f.n, 0.0);
  for (std::size_t u = 0; u < f.n; ++u) {
    for (const auto& [v, w] : g.out(u)) strength[u] += w;
  }
  if (!directed) {
    double total = std::accumulate(strength.begin(), strength.end(), 0.0);
    if (total == 0.0) {
      for (auto& p : f.visit) p = 1.0 / static_cast<double>(f.n);
      return f;
    }
    for (std::size_t u = 0; u < f.n; ++u) {
      f.visit[u] = strength[u] / total;
      for (const auto& [v, w] : g.out(u)) {
        f.flow_out[u].emplace_back(v, w / total);
        f.flow_in[v].emplace_back(u, w / total);
      }
    }
    return f;
  }
  const double nn = static_cast<double>(f.n);
  std::vector<double> p(f.n, 1.0 / nn), next(f.n);
  for (int it = 0; it < 1000; ++it) {
    double tele = 0.0;
    for (std::size_t u = 0; u < f.n; ++u) tele += p[u] * (strength[u] > 0 ? tau : 1.0);
    std::fill(next.begin(), next.end(), tele / nn);
    for (std::size_t u = 0; u < f.n; ++u) {
      if (strength[u] == 0) continue;
      for (const auto& [v, w] : g.out(u)) next[v] += (1.0 - tau) * p[u] * w / strength[u];
    }
    double delta = 0.0;
    for (std::size_t u = 0; u < f.n; ++u) delta += std::abs(next[u] - p[u]);
    p.swap(next);
    if (delta < 1e-15) break;
  }
  f.visit = p;
  for (std::size_t u = 0; u < f.n; ++u) {
    f.teleport[u] = p[u] * (strength[u] > 0 ? tau : 1.0);
    if (strength[u] == 0) continue;
    for (const auto& [v, w] : g.out(u)) {
      const double fl = (1.0 - tau) * p[u] * w / strength[u];
      f.flow_out[u].emplace_back(v, fl);
      f.flow_in[v].emplace_back(u, fl);
    }
  }
  return f;
}

/// Two-level map equation (bits) of a partition under a flow model. Module exit
/// flow = link flow leaving the module plus teleportation landing outside it.
inline double map_equation(const FlowModel& f, const std::vector<int>& module) {
  std::map<int, double> exit, visit, tele, count;
  for (std::size_t u = 0; u < f.n; ++u) {
    const int m = module[u];
    visit[m] += f.visit[u];
    tele[m] += f.teleport[u];
    count[m] += 1.0;
    for (const auto& [v, fl] : f.flow_out[u]) {
      if (module[v] != m) exit[m] += fl;
    }
  }
  double q = 0.0, sum_q = 0.0, sum_qp = 0.0, sum_p = 0.0;
  const double nn = static_cast<double>(f.n);
  for (const auto& [m, p] : visit) {
    const double qi = exit[m] + tele[m] * (nn - count[m]) / nn;
    q += qi;
    sum_q += plogp(qi);
    sum_qp += plogp(qi + p);
  }
  for (double p : f.visit) sum_p += plogp(p);
  return plogp(q) - 2.0 * sum_q - sum_p + sum_qp;
}

namespace detail {

/// Greedy optimizer state over "units" (original nodes or aggregated modules).
struct MapState {
  // Per unit.
  std::vector<double> visit, tele, count;
  std::vector<std::vector<std::pair<std::size_t, double>>> out, in;  // flows between units (self excluded)
  // Per module.
  std::vector<int> module;
  std::vector<double> m_visit, m_tele, m_count, m_exit;
  double n_total = 0.0;
  double sum_q = 0.0, sum_qp = 0.0, q_total = 0.0;

  double q_of(std::size_t m) const { return m_exit[m] + m_tele[m] * (n_total - m_count[m]) / n_total; }

  void recompute() {
    const auto k = m_visit.size();
    std::fill(m_visit.begin(), m_visit.end(), 0.0);
    std::fill(m_tele.begin(), m_tele.end(), 0.0);
    std::fill(m_count.begin(), m_count.end(), 0.0);
    std::fill(m_exit.begin(), m_exit.end(), 0.0);
    for (std::size_t u = 0; u < visit.size(); ++u) {
      const auto m = static_cast<std::size_t>(module[u]);
      m_visit[m] += visit[u];
      m_tele[m] += tele[u];
      m_count[m] += count[u];
      for (const auto& [v, fl] : out[u]) {
        if (module[v] != module[u]) m_exit[m] += fl;
      }
    }
    sum_q = sum_qp = q_total = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double q = q_of(m);
      q_total += q;
      sum_q += plogp(q);
      sum_qp += plogp(q + m_visit[m]);
    }
  }

  // Codelength without the constant node-entropy term.
  double partial_length() const { return plogp(q_total) - 2.0 * sum_q + sum_qp; }
};

inline bool move_units(MapState& s, Rng& rng) {
  const auto n = s.visit.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  bool any = false;
  for (int sweep = 0; sweep < 100; ++sweep) {
    shuffle(order, rng);
    int moves = 0;
    for (std::size_t u : order) {
      const auto old = static_cast<std::size_t>(s.module[u]);
      // Flow between u and each neighbouring module.
      std::map<std::size_t, std::pair<double, double>> link;  // module -> (u->m, m->u)
      for (const auto& [v, fl] : s.out[u]) link[static_cast<std::size_t>(s.module[v])].first += fl;
      for (const auto& [v, fl] : s.in[u]) link[static_cast<std::size_t>(s.module[v])].second += fl;
      double out_total = 0.0, in_total = 0.0;
      for (const auto& [v, fl] : s.out[u]) out_total += fl;
      for (const auto& [v, fl] : s.in[u]) in_total += fl;
      const auto old_link = link.count(old) ? link[old] : std::pair<double, double>{0.0, 0.0};

      // Old module after removing u.
      const double old_exit_new = s.m_exit[old] - (out_total - old_link.first) + old_link.second;
      const double old_visit_new = s.m_visit[old] - s.visit[u];
      const double old_tele_new = s.m_tele[old] - s.tele[u];
      const double old_count_new = s.m_count[old] - s.count[u];
      auto q_val = [&](double exit, double tele, double cnt) {
        return exit + tele * (s.n_total - cnt) / s.n_total;
      };
      const double q_old_before = s.q_of(old);
      const double q_old_after = old_count_new > 0 ? q_val(old_exit_new, old_tele_new, old_count_new) : 0.0;

      double best_delta = 0.0;
      std::size_t best = old;
      double best_exit = 0.0;
      auto consider = [&](std::size_t m, std::pair<double, double> lk) {
        if (m == old) return;
        const double exit_new = s.m_exit[m] + (out_total - lk.first) - lk.second;
        const double q_before = s.q_of(m);
        const double q_after = q_val(exit_new, s.m_tele[m] + s.tele[u], s.m_count[m] + s.count[u]);
        const double q_total = s.q_total - q_old_before - q_before + q_old_after + q_after;
        const double sum_q = s.sum_q - plogp(q_old_before) - plogp(q_before) + plogp(q_old_after) + plogp(q_after);
        const double sum_qp = s.sum_qp - plogp(q_old_before + s.m_visit[old]) - plogp(q_before + s.m_visit[m]) +
                              plogp(q_old_after + old_visit_new) + plogp(q_after + s.m_visit[m] + s.visit[u]);
        const double delta = plogp(q_total) - 2.0 * sum_q + sum_qp - s.partial_length();
        if (delta < best_delta - 1e-12) {
          best_delta = delta;
          best = m;
          best_exit = exit_new;
        }
      };
      for (const auto& [m, lk] : link) consider(m, lk);
      // Teleportation couples every module; an empty module is also a candidate
      // when u is not already alone.
      if (old_count_new > 0) {
        auto empty = std::find(s.m_count.begin(), s.m_count.end(), 0.0);
        if (empty != s.m_count.end()) consider(static_cast<std::size_t>(empty - s.m_count.begin()), {0.0, 0.0});
      }
      if (best == old) continue;

      const double q_best_before = s.q_of(best);
      s.m_exit[old] = old_count_new > 0 ? old_exit_new : 0.0;
      s.m_visit[old] = old_visit_new;
      s.m_tele[old] = old_tele_new;
      s.m_count[old] = old_count_new;
      s.m_exit[best] = best_exit;
      s.m_visit[best] += s.visit[u];
      s.m_tele[best] += s.tele[u];
      s.m_count[best] += s.count[u];
      s.module[u] = static_cast<int>(best);
      const double q_best_after = s.q_of(best);
      s.q_total += q_old_after - q_old_before + q_best_after - q_best_before;
      s.sum_q += plogp(q_old_after) - plogp(q_old_before) + plogp(q_best_after) - plogp(q_best_before);
      s.sum_qp += plogp(q_old_after + s.m_visit[old]) - plogp(q_old_before + s.m_visit[old] + s.visit[u]) +
                  plogp(q_best_after + s.m_visit[best]) - plogp(q_best_before + s.m_visit[best] - s.visit[u]);
      ++moves;
      any = true;
    }
    s.recompute();  // shed accumulated rounding
    if (moves == 0) break;
  }
  return any;
}

}  // namespace detail

/// Greedy two-level map-equation partition: node moves to a local optimum, then the
/// modules are aggregated into units and moved again, until nothing changes.
inline std::vector<int> infomap_partition(const IndexGraph& g, bool directed, std::uint64_t seed,
                                          double tau = 0.15) {
  const auto n = g.size();
  if (n == 0) return {};
  const FlowModel f = make_flow(directed ? g : g.symmetrized(), directed, tau);
  Rng rng(seed);

  std::vector<int> node_module(n);
  std::iota(node_module.begin(), node_module.end(), 0);

  // Units start as the original nodes.
  detail::MapState s;
  s.n_total = static_cast<double>(n);
  s.visit = f.visit;
  s.tele = f.teleport;
  s.count.assign(n, 1.0);
  s.out.assign(n, {});
  s.in.assign(n, {});
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, fl] : f.flow_out[u]) {
      if (v == u) continue;
      s.out[u].emplace_back(v, fl);
      s.in[v].emplace_back(u, fl);
    }
  }
  for (int level = 0; level < 50; ++level) {
    const auto units = s.visit.size();
    s.module.resize(units);
    std::iota(s.module.begin(), s.module.end(), 0);
    s.m_visit.assign(units, 0.0);
    s.m_tele.assign(units, 0.0);
    s.m_count.assign(units, 0.0);
    s.m_exit.assign(units, 0.0);
    s.recompute();
    const bool moved = detail::move_units(s, rng);
    if (!moved) break;
    // Aggregate: each non-empty module becomes a unit.
    const auto labels = canonical_labels(s.module);
    const auto k = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
    for (auto& m : node_module) m = labels[static_cast<std::size_t>(m)];
    detail::MapState next;
    next.n_total = s.n_total;
    next.visit.assign(k, 0.0);
    next.tele.assign(k, 0.0);
    next.count.assign(k, 0.0);
    std::vector<std::map<std::size_t, double>> agg(k);
    for (std::size_t u = 0; u < units; ++u) {
      const auto a = static_cast<std::size_t>(labels[u]);
      next.visit[a] += s.visit[u];
      next.tele[a] += s.tele[u];
      next.count[a] += s.count[u];
      for (const auto& [v, fl] : s.out[u]) {
        const auto b = static_cast<std::size_t>(labels[v]);
        if (a != b) agg[a][b] += fl;
      }
    }
    next.out.assign(k, {});
    next.in.assign(k, {});
    for (std::size_t a = 0; a < k; ++a) {
      for (const auto& [b, fl] : agg[a]) {
        next.out[a].emplace_back(b, fl);
        next.in[b].emplace_back(a, fl);
      }
    }
    s = std::move(next);
    if (k == units) break;
  }
  return canonical_labels(node_module);
}

/// Asynchronous label propagation on the symmetrized graph. Nodes are visited in a
/// fresh random order each sweep and adopt the label of largest incident weight,
/// ties broken uniformly at random; stops when every label is already a maximizer.
inline std::vector<int> label_propagation(const IndexGraph& g, std::uint64_t seed, int max_sweeps = 1000) {
  const auto n = g.size();
  const IndexGraph u = g.symmetrized();
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto maximizers = [&](std::size_t v) {
    std::map<int, double> score;
    for (const auto& [w, wt] : u.out(v)) {
      if (w != v) score[label[w]] += wt;
    }
    std::vector<int> best;
    double top = -1.0;
    for (const auto& [l, sc] : score) {
      if (sc > top + 1e-12) {
        top = sc;
        best = {l};
      } else if (std::abs(sc - top) <= 1e-12) {
        best.push_back(l);
      }
    }
    return best;
  };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    shuffle(order, rng);
    for (std::size_t v : order) {
      const auto best = maximizers(v);
      if (best.empty()) continue;
      if (std::find(best.begin(), best.end(), label[v]) != best.end() && best.size() == 1) continue;
      label[v] = best[uniform_index(rng, best.size())];
    }
    bool stable = true;
    for (std::size_t v = 0; v < n && stable; ++v) {
      const auto best = maximizers(v);
      if (!best.empty() && std::find(best.begin(), best.end(), label[v]) == best.end()) stable = false;
    }
    if (stable) break;
  }
  return canonical_labels(label);
}

}  // namespace claimcal
