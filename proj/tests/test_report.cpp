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

#include "claimcal/report.hpp"

namespace claimcal {
namespace {

DistanceCurve step_curve() {
  DistanceCurve c;
  c.grid = {0.1, 0.2, 0.3, 0.4};
  c.values = {0.5, 0.5, 0.25, 0.0};
  c.counts = {3, 3, 5, 9};
  return c;
}

TEST(CurveCsv, DeltasAndMissingMarkers) {
  const auto rows = curve_rows(step_curve());
  ASSERT_EQ(rows.size(), 4u);
  // Flat left neighbour: no jump.
  EXPECT_TRUE(is_missing(rows[0].delta_left));
  EXPECT_TRUE(is_missing(rows[1].delta_left));
  EXPECT_DOUBLE_EQ(rows[2].delta_left, 0.5);  // (0.5 - 0.25) / 0.5
  EXPECT_DOUBLE_EQ(rows[3].delta_left, 1.0);
  EXPECT_DOUBLE_EQ(rows[1].delta_right, -1.0);  // (0.25 - 0.5) / 0.25
  // Right neighbour W is zero: counted as a zero denominator, no value.
  EXPECT_TRUE(is_missing(rows[2].delta_right));
  EXPECT_TRUE(is_missing(rows[3].delta_right));

  std::stringstream buf;
  write_curve_csv(buf, rows);
  EXPECT_NE(buf.str().find("0.1,0.5,3,NA,NA\n"), std::string::npos);
  const auto back = read_curve_csv(buf);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].theta, rows[i].theta);
    EXPECT_EQ(back[i].w, rows[i].w);
    EXPECT_EQ(back[i].count, rows[i].count);
    EXPECT_TRUE(same_value(back[i].delta_left, rows[i].delta_left));
    EXPECT_TRUE(same_value(back[i].delta_right, rows[i].delta_right));
  }

  std::stringstream bad("theta,W\n");
  EXPECT_THROW(read_curve_csv(bad), ParseError);
  std::stringstream bad_row("theta,W,count,delta_left,delta_right\n0.1,0.2\n");
  EXPECT_THROW(read_curve_csv(bad_row), ParseError);
}

TEST(ImportanceCsv, EmptyTableIsHeaderOnly) {
  std::stringstream buf;
  write_importance_csv(buf, {}, "forest");
  EXPECT_EQ(buf.str(), "family,mean,ci_low,ci_high,model_kind\n");

  std::map<std::string, FamilyStat> fam;
  fam["JQ"] = {0.25, 0.125, 0.375, 10};
  fam["time"] = {0.5, kMissing, kMissing, 1};
  std::stringstream b2;
  write_importance_csv(b2, fam, "logit");
  EXPECT_EQ(b2.str(),
            "family,mean,ci_low,ci_high,model_kind\n"
            "JQ,0.25,0.125,0.375,logit\n"
            "time,0.5,NA,NA,logit\n");
}

TEST(Summary, MeanSdAndInterval) {
  const auto r = summarize("auc", {0.6, 0.7, 0.8});
  EXPECT_EQ(r.n, 3u);
  EXPECT_NEAR(r.mean, 0.7, 1e-12);
  EXPECT_NEAR(r.sd, 0.1, 1e-12);
  // t quantile with 2 dof at 0.975: 4.302652729911275
  EXPECT_NEAR(r.ci_high - r.mean, 4.302652729911275 * 0.1 / std::sqrt(3.0), 1e-9);
  const auto one = summarize("x", {0.5});
  EXPECT_TRUE(is_missing(one.sd));
  EXPECT_TRUE(is_missing(one.ci_low));
  std::stringstream buf;
  write_summary_csv(buf, {one});
  EXPECT_EQ(buf.str(), "name,n,mean,sd,ci_low,ci_high\nx,1,0.5,NA,NA,NA\n");
}

TEST(PolicyCsv, RowsFromReports) {
  EvalReport rep;
  rep.auc_samples = {0.6, 0.8};
  rep.ig_samples = {0.1, 0.3};
  rep.auc = mean_ci95(rep.auc_samples);
  rep.ig = mean_ci95(rep.ig_samples);
  const auto row = policy_row(2.5, rep);
  EXPECT_NEAR(row.auc_mean, 0.7, 1e-12);
  EXPECT_NEAR(row.auc_sd, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(row.ig_mean, 0.2, 1e-12);
  std::stringstream buf;
  write_policy_csv(buf, {row});
  EXPECT_TRUE(buf.str().starts_with("beta,auc_mean,auc_sd,ig_mean,ig_sd\n2.5,"));
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

void expect_well_formed(const std::string& svg) {
  EXPECT_TRUE(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
  EXPECT_TRUE(svg.ends_with("</svg>\n"));
  EXPECT_EQ(count(svg, "<text"), count(svg, "</text>"));
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
}

TEST(Svg, CurveChartHasLabelledAxes) {
  const auto rows = curve_rows(step_curve());
  const auto svg = curve_svg(rows, rows, Thresholds{0.2, 0.8});
  expect_well_formed(svg);
  EXPECT_NE(svg.find("class=\"xlabel\""), std::string::npos);
  EXPECT_NE(svg.find(">theta</text>"), std::string::npos);
  EXPECT_NE(svg.find(">W</text>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
}

TEST(Svg, BarChartWhiskersAndEscaping) {
  std::map<std::string, FamilyStat> fam;
  fam["CP/CD"] = {0.3, 0.2, 0.4, 5};
  fam["a<b"] = {-0.1, kMissing, kMissing, 1};
  const auto svg = importance_svg(fam, "Importance");
  expect_well_formed(svg);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_EQ(count(svg, "<rect"), 3u);  // background plus two bars
  EXPECT_EQ(count(svg, "<line"), 2u + 3u);  // two axes, one whisker with two caps
  expect_well_formed(importance_svg({}, "empty"));
}

TEST(Svg, PolicyChartSkipsMissingPoints) {
  std::vector<PolicyRow> rows = {{2.0, 0.7, 0.05, 0.1, 0.02}, {2.5, kMissing, kMissing, kMissing, kMissing},
                                 {3.0, 0.65, 0.04, 0.08, 0.01}};
  for (bool ig : {false, true}) {
    const auto svg = policy_svg(rows, ig);
    expect_well_formed(svg);
    EXPECT_NE(svg.find(">beta</text>"), std::string::npos);
  }
  expect_well_formed(auc_distribution_svg({{"neutral", {0.8, 0.7, 0.9}}}));
}

}  // namespace
}  // namespace claimcal
