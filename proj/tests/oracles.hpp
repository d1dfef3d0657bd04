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

// Independent reference computations used by the tests and the acceptance run.
// None of them call into the code paths they check.

#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <tuple>
#include <vector>

#include <gsl/gsl_sf_gamma.h>

namespace claimcal::oracle {

/// Shared log tables for the Riemann oracle grid x_i = i/N and cell midpoints.
class RiemannGrid {
 public:
  explicit RiemannGrid(std::size_t n) : n_(n), lx_(n + 1), l1x_(n + 1), lm_(n), l1m_(n) {
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = static_cast<double>(i) * h;
      lx_[i] = std::log(x);
      l1x_[i] = std::log1p(-x);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double m = (static_cast<double>(i) + 0.5) * h;
      lm_[i] = std::log(m);
      l1m_[i] = std::log1p(-m);
    }
  }

  std::size_t size() const { return n_; }

  /// Beta(a,b) CDF at every grid point. GSL's incomplete beta pins the values
  /// near both ends and every `anchor` cells; in between, Simpson's rule on the
  /// density carries the CDF forward one cell at a time.
  std::vector<double> cdf(double a, double b, std::size_t anchor = 1000) const {
    std::vector<double> F(n_ + 1);
    const double h = 1.0 / static_cast<double>(n_);
    const double lnb = gsl_sf_lnbeta(a, b);
    auto pdf = [&](double lx, double l1x) { return std::exp((a - 1.0) * lx + (b - 1.0) * l1x - lnb); };
    F[0] = 0.0;
    F[n_] = 1.0;
    for (std::size_t i = 1; i < n_; ++i) {
      if (i <= anchor || i + anchor >= n_ || i % anchor == 0) {
        F[i] = gsl_sf_beta_inc(a, b, static_cast<double>(i) * h);
      } else {
        const double cell = h / 6.0 * (pdf(lx_[i - 1], l1x_[i - 1]) + 4.0 * pdf(lm_[i - 1], l1m_[i - 1]) + pdf(lx_[i], l1x_[i]));
        F[i] = F[i - 1] + cell;
      }
    }
    return F;
  }

  /// Mean of |F_p - F_q| over the N right endpoints.
  double w1(const std::vector<double>& Fp, const std::vector<double>& Fq) const {
    double s = 0.0;
    for (std::size_t i = 1; i <= n_; ++i) s += std::abs(Fp[i] - Fq[i]);
    return s / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
  std::vector<double> lx_, l1x_, lm_, l1m_;
};

/// Two-level map equation of an undirected weighted graph given as an edge list,
/// written out from its textbook form: flows are strength / total strength.
inline double undirected_map_equation(std::size_t n, const std::vector<std::tuple<int, int, double>>& edges,
                                      const std::vector<int>& module) {
  auto plogp = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
  std::vector<double> strength(n, 0.0);
  double total = 0.0;
  for (const auto& [u, v, w] : edges) {
    strength[static_cast<std::size_t>(u)] += w;
    strength[static_cast<std::size_t>(v)] += w;
    total += 2.0 * w;
  }
  int m = 0;
  for (int x : module) m = std::max(m, x + 1);
  std::vector<double> exit(static_cast<std::size_t>(m), 0.0), flow(static_cast<std::size_t>(m), 0.0);
  for (std::size_t a = 0; a < n; ++a) flow[static_cast<std::size_t>(module[a])] += strength[a] / total;
  for (const auto& [u, v, w] : edges) {
    const int mu = module[static_cast<std::size_t>(u)], mv = module[static_cast<std::size_t>(v)];
    if (mu != mv) {
      exit[static_cast<std::size_t>(mu)] += w / total;
      exit[static_cast<std::size_t>(mv)] += w / total;
    }
  }
  double q = 0.0, sum_exit = 0.0, sum_both = 0.0, sum_nodes = 0.0;
  for (std::size_t i = 0; i < exit.size(); ++i) {
    q += exit[i];
    sum_exit += plogp(exit[i]);
    sum_both += plogp(exit[i] + flow[i]);
  }
  for (std::size_t a = 0; a < n; ++a) sum_nodes += plogp(strength[a] / total);
  return plogp(q) - 2.0 * sum_exit - sum_nodes + sum_both;
}

/// Calls `visit` with every set partition of {0..n-1} as restricted-growth labels.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> a(n, 0), pm(n, 0);
  while (true) {
    visit(a);
    for (std::size_t j = 0; j < n; ++j) pm[j] = j == 0 ? a[0] : std::max(pm[j - 1], a[j]);
    std::size_t i = n;
    while (i > 1 && a[i - 1] > pm[i - 2]) --i;
    if (i <= 1) return;
    ++a[i - 1];
    for (std::size_t j = i; j < n; ++j) a[j] = 0;
  }
}

}  // namespace claimcal::oracle
