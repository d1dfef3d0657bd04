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

// CSV tables and hand-drawn SVG charts for pipeline outputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "claimcal/eval.hpp"
#include "claimcal/partition.hpp"

namespace claimcal {

// CSV -----------------------------------------------------------------------------

struct CurveRow {
  double theta = 0.0, w = 0.0;
  std::size_t count = 0;
  double delta_left = kMissing, delta_right = kMissing;
};

inline std::vector<CurveRow> curve_rows(const DistanceCurve& curve) {
  std::vector<CurveRow> rows(curve.grid.size());
  for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = {curve.grid[j], curve.values[j], curve.counts[j]};
  for (const auto& d : relative_discontinuity(curve, Side::Left).points) rows[d.index].delta_left = d.delta;
  for (const auto& d : relative_discontinuity(curve, Side::Right).points) rows[d.index].delta_right = d.delta;
  return rows;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "theta,W,count,delta_left,delta_right\n";
  for (const auto& r : rows) {
    out << text::fmt(r.theta) << ',' << text::fmt(r.w) << ',' << r.count << ',' << text::fmt(r.delta_left) << ','
        << text::fmt(r.delta_right) << '\n';
  }
}

inline std::vector<CurveRow> read_curve_csv(std::istream& in, const std::string& source = "curve") {
  std::vector<CurveRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || text::trim(line) != "theta,W,count,delta_left,delta_right") {
    throw ParseError(source, 1, "expected header theta,W,count,delta_left,delta_right");
  }
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 5) throw ParseError(source, lineno, "expected 5 fields");
    auto num = [&](const std::string& s) {
      if (s == "NA") return kMissing;
      auto v = text::parse_double(s);
      if (!v) throw ParseError(source, lineno, "bad number " + s);
      return *v;
    };
    CurveRow r;
    r.theta = num(f[0]);
    r.w = num(f[1]);
    r.count = static_cast<std::size_t>(num(f[2]));
    r.delta_left = num(f[3]);
    r.delta_right = num(f[4]);
    rows.push_back(r);
  }
  return rows;
}

inline void write_importance_csv(std::ostream& out, const std::map<std::string, FamilyStat>& families,
                                 const std::string& model_kind) {
  out << "family,mean,ci_low,ci_high,model_kind\n";
  for (const auto& [f, s] : families) {
    out << f << ',' << text::fmt(s.mean) << ',' << text::fmt(s.ci_low) << ',' << text::fmt(s.ci_high) << ','
        << model_kind << '\n';
  }
}

inline void write_auc_samples_header(std::ostream& out) {
  out << "task,repeat,fold,auc,conditional_auc,ig,flag\n";
}

/// Rows for every fold of `rep`; write the header once before the first report.
inline void write_auc_samples_csv(std::ostream& out, const EvalReport& rep) {
  for (const auto& fr : rep.folds) {
    std::string flag = fr.flag;
    std::replace(flag.begin(), flag.end(), ',', ';');
    out << to_string(rep.task) << ',' << fr.repeat << ',' << fr.fold << ',' << text::fmt(fr.auc) << ','
        << text::fmt(fr.conditional_auc) << ',' << text::fmt(fr.ig) << ',' << flag << '\n';
  }
}

struct SummaryRow {
  std::string name;
  std::size_t n = 0;
  double mean = kMissing, sd = kMissing, ci_low = kMissing, ci_high = kMissing;
};

inline SummaryRow summarize(const std::string& name, const std::vector<double>& v) {
  SummaryRow r;
  r.name = name;
  r.n = v.size();
  const auto ci = mean_ci95(v);
  r.mean = ci.mean;
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  if (v.size() >= 2) r.sd = stats::sample_sd(v);
  return r;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "name,n,mean,sd,ci_low,ci_high\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.n << ',' << text::fmt(r.mean) << ',' << text::fmt(r.sd) << ',' << text::fmt(r.ci_low)
        << ',' << text::fmt(r.ci_high) << '\n';
  }
}

struct PolicyRow {
  double beta = kMissing;
  double auc_mean = kMissing, auc_sd = kMissing, ig_mean = kMissing, ig_sd = kMissing;
};

inline PolicyRow policy_row(double beta, const EvalReport& rep) {
  PolicyRow r;
  r.beta = beta;
  r.auc_mean = rep.auc.mean;
  r.ig_mean = rep.ig.mean;
  if (rep.auc_samples.size() >= 2) r.auc_sd = stats::sample_sd(rep.auc_samples);
  if (rep.ig_samples.size() >= 2) r.ig_sd = stats::sample_sd(rep.ig_samples);
  return r;
}

inline void write_policy_csv(std::ostream& out, const std::vector<PolicyRow>& rows) {
  out << "beta,auc_mean,auc_sd,ig_mean,ig_sd\n";
  for (const auto& r : rows) {
    out << text::fmt(r.beta) << ',' << text::fmt(r.auc_mean) << ',' << text::fmt(r.auc_sd) << ','
        << text::fmt(r.ig_mean) << ',' << text::fmt(r.ig_sd) << '\n';
  }
}

// SVG -----------------------------------------------------------------------------

namespace svg {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[i % 6];
}

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::vector<double> y_low, y_high;  // optional band
};

// Plot frame with linear axes, tick labels and axis titles.
class Frame {
 public:
  static constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;

  Frame(double x0, double x1, double y0, double y1) : x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
  }
  double px(double x) const { return L + (x - x0_) / (x1_ - x0_) * (W - L - R); }
  double py(double y) const { return H - B - (y - y0_) / (y1_ - y0_) * (H - T - B); }

  void axes(std::ostream& o, const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double xv = x0_ + (x1_ - x0_) * i / 5.0, yv = y0_ + (y1_ - y0_) * i / 5.0;
      o << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << text::fmt(std::round(xv * 1000.0) / 1000.0) << "</text>\n";
      o << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << text::fmt(std::round(yv * 1000.0) / 1000.0) << "</text>\n";
    }
    o << "<text class=\"xlabel\" x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(xlabel) << "</text>\n";
    o << "<text class=\"ylabel\" x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\""
      << " transform=\"rotate(-90 18 " << (T + H - B) / 2 << ")\">" << escape(ylabel) << "</text>\n";
  }

 private:
  double x0_, x1_, y0_, y1_;
};

inline void range_of(const std::vector<double>& v, double& lo, double& hi) {
  for (double x : v) {
    if (is_missing(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

inline std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
}

/// Line chart of one or more series; a series with y_low/y_high also gets a shaded band.
inline std::string line_chart(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                              const std::string& ylabel) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    range_of(s.x, x0, x1);
    range_of(s.y, y0, y1);
    range_of(s.y_low, y0, y1);
    range_of(s.y_high, y0, y1);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  const Frame fr(x0, x1, y0, y1);
  std::ostringstream o;
  o << header();
  fr.axes(o, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    if (!s.y_low.empty() && s.y_low.size() == s.x.size() && s.y_high.size() == s.x.size()) {
      o << "<polygon fill=\"" << color(k) << "\" fill-opacity=\"0.2\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!is_missing(s.y_high[i])) o << num(fr.px(s.x[i])) << ',' << num(fr.py(s.y_high[i])) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        if (!is_missing(s.y_low[i])) o << num(fr.px(s.x[i])) << ',' << num(fr.py(s.y_low[i])) << ' ';
      }
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!is_missing(s.y[i])) o << num(fr.px(s.x[i])) << ',' << num(fr.py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    o << "<text x=\"" << Frame::W - Frame::R - 150 << "\" y=\"" << Frame::T + 16 * (k + 1) << "\" font-size=\"12\" fill=\""
      << color(k) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

struct Bar {
  std::string label;
  double value = 0.0, low = kMissing, high = kMissing;
};

/// Horizontal bars with centred CI whiskers.
inline std::string bar_chart(const std::vector<Bar>& bars, const std::string& title, const std::string& xlabel) {
  const double W = 640, L = 150, R = 30, T = 40, row = 22;
  const double H = T + row * static_cast<double>(std::max<std::size_t>(bars.size(), 1)) + 50;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    for (double v : {b.value, b.low, b.high}) {
      if (is_missing(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;
  auto px = [&](double v) { return L + (v - lo) / (hi - lo) * (W - L - R); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";
  const double base = H - 40;
  o << "<line x1=\"" << num(px(lo)) << "\" y1=\"" << num(base) << "\" x2=\"" << num(px(hi)) << "\" y2=\"" << num(base)
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << num(px(0.0)) << "\" y1=\"" << T << "\" x2=\"" << num(px(0.0)) << "\" y2=\"" << num(base)
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    o << "<text x=\"" << num(px(v)) << "\" y=\"" << num(base + 16) << "\" text-anchor=\"middle\" font-size=\"11\">"
      << text::fmt(std::round(v * 1000.0) / 1000.0) << "</text>\n";
  }
  o << "<text class=\"xlabel\" x=\"" << (L + W - R) / 2 << "\" y=\"" << num(H - 6)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(xlabel) << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = T + row * static_cast<double>(i);
    const double a = px(std::min(0.0, b.value)), e = px(std::max(0.0, b.value));
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(y + 14) << "\" text-anchor=\"end\" font-size=\"11\">"
      << escape(b.label) << "</text>\n";
    o << "<rect x=\"" << num(a) << "\" y=\"" << num(y + 4) << "\" width=\"" << num(e - a) << "\" height=\""
      << num(row - 8) << "\" fill=\"" << color(0) << "\"/>\n";
    if (!is_missing(b.low) && !is_missing(b.high)) {
      const double cy = y + row / 2;
      o << "<line x1=\"" << num(px(b.low)) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(px(b.high)) << "\" y2=\""
        << num(cy) << "\" stroke=\"black\"/>\n";
      for (double v : {b.low, b.high}) {
        o << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(cy - 5) << "\" x2=\"" << num(px(v)) << "\" y2=\""
          << num(cy + 5) << "\" stroke=\"black\"/>\n";
      }
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace svg

inline std::string curve_svg(const std::vector<CurveRow>& minus, const std::vector<CurveRow>& plus,
                             const Thresholds& chosen) {
  auto series = [](const std::string& name, const std::vector<CurveRow>& rows) {
    svg::Series s;
    s.name = name;
    for (const auto& r : rows) {
      s.x.push_back(r.theta);
      s.y.push_back(r.w);
    }
    return s;
  };
  std::vector<svg::Series> s;
  if (!minus.empty()) s.push_back(series("W(g-, g0) vs theta- (theta- = " + text::fmt(chosen.theta_minus) + ")", minus));
  if (!plus.empty()) s.push_back(series("W(g+, g0) vs theta+ (theta+ = " + text::fmt(chosen.theta_plus) + ")", plus));
  return svg::line_chart(s, "Class distance curves", "theta", "W");
}

inline std::string importance_svg(const std::map<std::string, FamilyStat>& families, const std::string& title) {
  std::vector<svg::Bar> bars;
  for (const auto& [f, st] : families) bars.push_back({f, st.mean, st.ci_low, st.ci_high});
  std::stable_sort(bars.begin(), bars.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
  return svg::bar_chart(bars, title, "importance (95% CI)");
}

inline std::string policy_svg(const std::vector<PolicyRow>& rows, bool ig) {
  svg::Series s;
  s.name = ig ? "mean IG +/- sd" : "mean AUC +/- sd";
  for (const auto& r : rows) {
    const double m = ig ? r.ig_mean : r.auc_mean, sd = ig ? r.ig_sd : r.auc_sd;
    s.x.push_back(r.beta);
    s.y.push_back(m);
    s.y_low.push_back(is_missing(sd) ? m : m - sd);
    s.y_high.push_back(is_missing(sd) ? m : m + sd);
  }
  return svg::line_chart({s}, ig ? "Information gain by claim-count slope" : "AUC by claim-count slope", "beta",
                         ig ? "IG (bits)" : "AUC");
}

/// Ranked AUC samples per task, one line each.
inline std::string auc_distribution_svg(const std::vector<std::pair<std::string, std::vector<double>>>& samples) {
  std::vector<svg::Series> s;
  for (const auto& [name, v] : samples) {
    svg::Series x;
    x.name = name;
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      x.x.push_back(sorted.size() > 1 ? static_cast<double>(i) / static_cast<double>(sorted.size() - 1) : 0.5);
      x.y.push_back(sorted[i]);
    }
    s.push_back(std::move(x));
  }
  return svg::line_chart(s, "AUC samples across folds", "sample quantile", "AUC");
}

}  // namespace claimcal
