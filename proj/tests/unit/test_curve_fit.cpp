// Copyright 2026 The kappa-toolkit Authors.
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

#include <cmath>

#include "kappa/curve_fit.hpp"
#include "kappa/errors.hpp"
#include "kappa/experiments.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {
namespace {

std::vector<CurvePoint> fixture_trajectory() {
  const auto fx = load_fixtures();
  const auto& t = fx.at("matched_l0_trajectory");
  const auto m = t.at("widths").get<std::vector<double>>();
  const auto n = t.at("n_causal").get<std::vector<double>>();
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back({m[i], n[i]});
  return out;
}

TEST(SaturatingCurve, DirectEvaluation) {
  const auto ref = load_fixtures().at("fit_reference");
  const double kappa = ref.at("kappa_hat").get<double>();
  const double tau = ref.at("tau_hat").get<double>();
  const double m = 1048576.0;
  EXPECT_NEAR(saturating_curve(m, kappa, tau), kappa * (1.0 - std::exp(-m / tau)), 1e-9);
  EXPECT_NEAR(saturating_curve(m, kappa, tau), 1384.8, 0.5);
  EXPECT_EQ(saturating_curve(0.0, kappa, tau), 0.0);
}

TEST(ApplyExclusion, DropsThroughMinimum) {
  const auto pts = fixture_trajectory();
  std::vector<double> excluded;
  const auto kept = apply_exclusion(pts, ExcludeRule::PostMinimum, &excluded);
  ASSERT_EQ(kept.size(), 4u);
  EXPECT_EQ(kept.front().m, 131072.0);
  EXPECT_EQ(excluded, (std::vector<double>{16384, 32768, 65536}));
  EXPECT_EQ(apply_exclusion(pts, ExcludeRule::None).size(), 7u);
  EXPECT_EQ(parse_exclude_rule("POST_MINIMUM"), ExcludeRule::PostMinimum);
  EXPECT_EQ(to_string(ExcludeRule::None), "NONE");
  EXPECT_THROW(parse_exclude_rule("ALL"), ConfigError);
}

TEST(FitSaturating, ReferenceTrajectory) {
  const auto ref = load_fixtures().at("fit_reference");
  const FitResult fit = fit_saturating(fixture_trajectory());
  EXPECT_EQ(fit.n_points_used, 4u);
  EXPECT_NEAR(fit.kappa_hat, ref.at("kappa_hat").get<double>(), 0.01 * ref.at("kappa_hat").get<double>());
  EXPECT_NEAR(fit.tau_hat, ref.at("tau_hat").get<double>(), 0.01 * ref.at("tau_hat").get<double>());
  EXPECT_EQ(fit.wald_ci_95.lo, 0.0);
  EXPECT_NEAR(fit.wald_ci_95.hi, ref.at("wald_ci_95")[1].get<double>(), 5.0);
  EXPECT_NEAR(fit.wald_ci_95.hi, fit.kappa_hat + normal_quantile(0.975) * fit.kappa_se, 1e-6);
  EXPECT_FALSE(fit.at_bound);
}

TEST(FitSaturating, NoiselessRecovery) {
  const double kappa = 1990.0, tau = 881000.0;
  std::vector<CurvePoint> pts;
  for (double m : {131072.0, 262144.0, 524288.0, 1048576.0}) pts.push_back({m, saturating_curve(m, kappa, tau)});
  FitOptions opt;
  opt.exclude = ExcludeRule::None;
  const FitResult fit = fit_saturating(pts, opt);
  EXPECT_LT(std::abs(fit.kappa_hat - kappa) / kappa, 1e-6);
  EXPECT_LT(std::abs(fit.tau_hat - tau) / tau, 1e-6);
  EXPECT_LT(fit.rss, 1e-12);
}

TEST(FitSaturating, RecoversCurvesAcrossScales) {
  Rng rng = make_rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double tau : {50.0, 400.0, 3000.0}) {
    std::vector<CurvePoint> pts;
    for (double m = 64; m <= 4096; m *= 2) pts.push_back({m, saturating_curve(m, 40.0, tau) + 0.2 * noise(rng)});
    FitOptions opt;
    opt.exclude = ExcludeRule::None;
    const FitResult fit = fit_saturating(pts, opt);
    EXPECT_NEAR(fit.kappa_hat, 40.0, 2.0) << "tau " << tau;
  }
}

TEST(FitSaturating, FailureModes) {
  const std::vector<CurvePoint> two = {{1, 1}, {2, 2}};
  EXPECT_THROW(fit_saturating(two), FitError);
  const std::vector<CurvePoint> dipping = {{1, 9}, {2, 8}, {4, 1}, {8, 2}, {16, 3}};
  EXPECT_THROW(fit_saturating(dipping), FitError);
  try {
    fit_saturating(dipping);
  } catch (const FitError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(FitSaturating, KappaBoundIsReported) {
  FitOptions opt;
  opt.exclude = ExcludeRule::None;
  opt.kappa_max = 100.0;
  const std::vector<CurvePoint> linear = {{1, 10}, {2, 20}, {3, 30}, {4, 40}};
  const FitResult fit = fit_saturating(linear, opt);
  EXPECT_TRUE(fit.at_bound);
  EXPECT_LE(fit.kappa_hat, 100.0 + 1e-9);
}

TEST(DipFit, RecoversPlantedDip) {
  std::vector<CurvePoint> pts;
  for (double m = 64; m <= 65536; m *= 2) pts.push_back({m, dip_curve(m, 100.0, 2000.0, 15.0, 1024.0, 600.0)});
  FitOptions opt;
  opt.exclude = ExcludeRule::None;
  const DipFitResult fit = fit_saturating_with_dip(pts, opt);
  EXPECT_LT(fit.rss, 1e-3);
  EXPECT_NEAR(fit.kappa_hat, 100.0, 1.0);
  EXPECT_EQ(fit.n_points_used, pts.size());
  const std::vector<CurvePoint> short_pts(pts.begin(), pts.begin() + 5);
  EXPECT_THROW(fit_saturating_with_dip(short_pts, opt), FitError);
}

TEST(Interval, Basics) {
  const Interval i{1.0, 3.0};
  EXPECT_TRUE(i.contains(1.0));
  EXPECT_TRUE(i.contains(3.0));
  EXPECT_FALSE(i.contains(3.5));
  EXPECT_DOUBLE_EQ(i.width(), 2.0);
}

}  // namespace
}  // namespace kappa
