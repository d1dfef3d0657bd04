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

// Beta posteriors and the 1-Wasserstein distance between two Beta laws on [0,1].

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>

#include "claimcal/common.hpp"

namespace claimcal {

struct BetaPosterior {
  double a = 1.0;
  double b = 1.0;

  double mean() const noexcept { return a / (a + b); }
  double sd() const noexcept {
    const double s = a + b;
    return std::sqrt(a * b / (s * s * (s + 1.0)));
  }

  friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;
  friend std::ostream& operator<<(std::ostream& os, const BetaPosterior& p) {
    return os << "Beta(" << p.a << ", " << p.b << ")";
  }
};

inline void check_posterior(const BetaPosterior& p) {
  if (!std::isfinite(p.a) || !std::isfinite(p.b) || p.a <= 0 || p.b <= 0) {
    throw Error("beta parameters must be finite and positive");
  }
}

/// Conjugate update of a Beta prior with Bernoulli outcomes.
template <typename Range>
BetaPosterior beta_update(double prior_a, double prior_b, const Range& outcomes) {
  BetaPosterior p{prior_a, prior_b};
  check_posterior(p);
  for (auto y : outcomes) {
    if (y) {
      p.a += 1.0;
    } else {
      p.b += 1.0;
    }
  }
  return p;
}

inline BetaPosterior beta_update(double prior_a, double prior_b, std::initializer_list<int> outcomes) {
  return beta_update<std::initializer_list<int>>(prior_a, prior_b, outcomes);
}

/// Update from success/failure counts.
inline BetaPosterior beta_update_counts(BetaPosterior prior, double successes, double failures) {
  check_posterior(prior);
  return {prior.a + successes, prior.b + failures};
}

/// Regularized incomplete beta I_x(a, b).
inline double beta_cdf(double x, const BetaPosterior& p) {
  check_posterior(p);
  if (std::isnan(x)) throw Error("beta_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(p.a, p.b, x);
}

namespace detail {

inline double log_beta_pdf(double x, const BetaPosterior& p) {
  return (p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x) -
         (std::lgamma(p.a) + std::lgamma(p.b) - std::lgamma(p.a + p.b));
}

/// Points where the two densities cross. The log density ratio is
/// c + da*log x + db*log(1-x), which has at most two roots on (0,1).
inline std::vector<double> density_crossings(const BetaPosterior& p, const BetaPosterior& q) {
  const double da = p.a - q.a, db = p.b - q.b;
  auto h = [&](double x) { return log_beta_pdf(x, p) - log_beta_pdf(x, q); };
  std::vector<double> roots;
  auto bisect = [&](double lo, double hi) {
    double hlo = h(lo), hhi = h(hi);
    if (!(hlo < 0 && hhi > 0) && !(hlo > 0 && hhi < 0)) return;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double hm = h(mid);
      if ((hm < 0) == (hlo < 0)) {
        lo = mid;
        hlo = hm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  };
  constexpr double lo = 1e-300, hi = 1.0 - 1e-16;
  if (da != 0.0 && db != 0.0 && (da > 0) == (db > 0)) {
    const double xs = da / (da + db);
    bisect(lo, xs);
    bisect(xs, hi);
  } else {
    bisect(lo, hi);
  }
  return roots;
}

}  // namespace detail

struct WassersteinOptions {
  double abs_tolerance = 1e-11;  // total absolute error budget
  unsigned max_depth = 24;
};

namespace detail {

/// Adaptive Gauss-Kronrod. A subinterval is accepted when its error estimate meets
/// its share of the absolute budget or sits at the roundoff floor of the integrand.
template <typename F>
double adaptive_gk(const F& f, double lo, double hi, double tol, unsigned depth) {
  double err = 0.0, l1 = 0.0;
  const double est =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 0, 0.0, &err, &l1);
  if (err <= tol || err <= 256.0 * std::numeric_limits<double>::epsilon() * l1 || depth == 0) return est;
  const double mid = 0.5 * (lo + hi);
  return adaptive_gk(f, lo, mid, 0.5 * tol, depth - 1) + adaptive_gk(f, mid, hi, 0.5 * tol, depth - 1);
}

/// Exponent for the substitution x = lo + (hi-lo) u^k that smooths a x^s endpoint.
inline double endpoint_power(double s) { return s >= 1.0 ? 1.0 : std::ceil(2.0 / s); }

}  // namespace detail

/// W1 between two Beta laws: the integral over [0,1] of |F_p - F_q|, by adaptive
/// Gauss-Kronrod quadrature. The integrand is split where the CDFs cross (at most
/// once in the interior) and around the bulk of each law so every piece is smooth
/// and resolved even for very concentrated posteriors. Pieces touching 0 or 1 are
/// integrated after a power substitution when a shape parameter is below 1.
inline double wasserstein_beta(const BetaPosterior& p, const BetaPosterior& q, const WassersteinOptions& opt = {}) {
  check_posterior(p);
  check_posterior(q);
  if (p == q) return 0.0;
  auto diff = [&](double x) { return beta_cdf(x, p) - beta_cdf(x, q); };

  std::vector<double> cuts{0.0, 1.0};
  for (const auto& d : {p, q}) {
    const double m = d.mean(), s = d.sd();
    for (double k : {-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0}) {
      const double x = m + k * s;
      if (x > 1e-12 && x < 1.0 - 1e-12) cuts.push_back(x);
    }
  }
  // F_p - F_q is monotone between the density crossings, so its single interior
  // zero (if any) is bracketed by them.
  const auto dc = detail::density_crossings(p, q);
  for (double x : dc) {
    if (x > 1e-12 && x < 1.0 - 1e-12) cuts.push_back(x);
  }
  if (dc.size() == 2) {
    const double flo = diff(dc[0]), fhi = diff(dc[1]);
    if ((flo < 0 && fhi > 0) || (flo > 0 && fhi < 0)) {
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(diff, dc[0], dc[1], flo, fhi,
                                                 boost::math::tools::eps_tolerance<double>(50), iters);
      cuts.push_back(0.5 * (r.first + r.second));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double k0 = detail::endpoint_power(std::min(p.a, q.a));
  const double k1 = detail::endpoint_power(std::min(p.b, q.b));
  const double budget = opt.abs_tolerance / static_cast<double>(cuts.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (hi - lo <= 0.0) continue;
    double piece;
    if (i == 0 && k0 > 1.0) {
      const double w = hi - lo;
      auto g = [&](double u) { return diff(lo + w * std::pow(u, k0)) * w * k0 * std::pow(u, k0 - 1.0); };
      piece = detail::adaptive_gk(g, 0.0, 1.0, budget, opt.max_depth);
    } else if (i + 2 == cuts.size() && k1 > 1.0) {
      const double w = hi - lo;
      auto g = [&](double u) { return diff(hi - w * std::pow(u, k1)) * w * k1 * std::pow(u, k1 - 1.0); };
      piece = detail::adaptive_gk(g, 0.0, 1.0, budget, opt.max_depth);
    } else {
      piece = detail::adaptive_gk(diff, lo, hi, budget, opt.max_depth);
    }
    total += std::abs(piece);
  }
  return total;
}

}  // namespace claimcal
