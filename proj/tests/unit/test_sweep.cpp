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
#include <set>

#include "kappa/errors.hpp"
#include "kappa/experiments.hpp"
#include "kappa/stats.hpp"
#include "kappa/sweep.hpp"

namespace kappa {
namespace {

GroundTruthSpec small_model() {
  GroundTruthSpec s;
  s.d = 16;
  s.n_features = 60;
  s.n_causal = 6;
  s.active_per_sample = 3;
  s.vocab_size = 32;
  return s;
}

SweepConfig small_sweep() {
  SweepConfig c;
  c.widths = {16, 32, 64, 128};
  c.m_ref = 16;
  c.k = 4;
  c.n_train = 1024;
  c.n_eval = 256;
  c.train.epochs = 3;
  return c;
}

TEST(SweepConfig, Violations) {
  SweepConfig c = small_sweep();
  EXPECT_TRUE(sweep_violations(c).empty());
  c.m_ref = 24;
  const auto v = sweep_violations(c);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v.front().find("m_ref"), std::string::npos);
  EXPECT_THROW(validate(c), ConfigError);
  c = small_sweep();
  c.k = 32;
  EXPECT_FALSE(sweep_violations(c).empty());
  c = small_sweep();
  c.train.epochs = 0;
  EXPECT_FALSE(sweep_violations(c).empty());
}

TEST(WidthSweep, CalibrationIdentityAndDeterminism) {
  const GroundTruthModel model = generate_model(small_model());
  const SweepConfig cfg = small_sweep();
  std::set<std::size_t> seen;
  SweepHooks hooks;
  hooks.on_width_trained = [&](const WidthRun& r) { seen.insert(r.m); };
  const SweepResult a = run_width_sweep(model, cfg, 5, hooks);
  EXPECT_EQ(seen.size(), cfg.widths.size());
  ASSERT_EQ(a.points.size(), 4u);
  EXPECT_EQ(a.points.front().n_causal, top_fraction_count(16, cfg.percentile));
  for (const auto& p : a.points) {
    EXPECT_EQ(p.epsilon_abs, a.calibration.epsilon_abs);
    EXPECT_DOUBLE_EQ(p.mean_l0, 4.0);
    EXPECT_LE(p.n_repr, p.m);
  }
  SweepHooks parallel;
  parallel.jobs = 3;
  const SweepResult b = run_width_sweep(model, cfg, 5, parallel);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.width_scores().back().scores, b.width_scores().back().scores);
  const auto curve = a.causal_curve();
  EXPECT_EQ(curve.back().m, 128.0);
}

TEST(Wedge, ProportionalNullHasNoWedge) {
  // Each width holds m / m_ref copies of the reference score distribution.
  const std::vector<double> base = {0.1, 0.5, 2.0, 3.0, 0.2, 0.05, 1.5, 0.7};
  std::vector<WidthPoint> points;
  for (std::size_t m : {8u, 64u, 512u}) {
    std::vector<double> scores;
    for (std::size_t r = 0; r < m / 8; ++r) scores.insert(scores.end(), base.begin(), base.end());
    WidthPoint p;
    p.m = m;
    p.n_causal = static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](double s) { return s >= 1.5; }));
    p.n_repr = m;
    points.push_back(p);
  }
  const WedgeReport w = wedge_ratio(points, 8);
  EXPECT_DOUBLE_EQ(w.causal_ratio, w.width_ratio);
  EXPECT_DOUBLE_EQ(w.repr_ratio, 64.0);
  EXPECT_THROW(wedge_ratio(points, 16), InputError);
  points[0].n_causal = 0;
  EXPECT_THROW(wedge_ratio(points, 8), UndefinedError);
}

TEST(Wedge, ReferenceValues) {
  const auto w = load_fixtures().at("wedge");
  const auto nc = w.at("n_causal").get<std::vector<std::size_t>>();
  const auto nr = w.at("n_repr").get<std::vector<std::size_t>>();
  const std::vector<WidthPoint> pts = {{w.at("m_ref").get<std::size_t>(), nc[0], nr[0], 0, 0, 0, 0},
                                       {w.at("m_max").get<std::size_t>(), nc[1], nr[1], 0, 0, 0, 0}};
  const WedgeReport r = wedge_ratio(pts, pts[0].m);
  EXPECT_NEAR(r.causal_ratio, w.at("causal_ratio").get<double>(), 0.01);
  EXPECT_NEAR(r.repr_ratio, w.at("repr_ratio").get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(r.width_ratio, 64.0);
}

TEST(Sensitivity, ReferenceVerdict) {
  const auto ts = load_fixtures().at("threshold_sensitivity");
  const auto mult = ts.at("multipliers").get<std::vector<double>>();
  const auto ratios = ts.at("ratios").get<std::vector<double>>();
  const SensitivityReport r = sensitivity_verdict(mult, ratios, ts.at("ratio_limit").get<double>(),
                                                  ts.at("min_pass").get<std::size_t>());
  EXPECT_EQ(r.n_pass, ts.at("n_pass").get<std::size_t>());
  EXPECT_FALSE(r.overall_pass);
  EXPECT_FALSE(r.rows[0].pass);
  EXPECT_TRUE(r.rows[2].pass);
}

TEST(Sensitivity, NonFiniteRatioFails) {
  const std::vector<double> m = {1.0, 2.0};
  const std::vector<double> r = {std::numeric_limits<double>::infinity(), 2.0};
  const SensitivityReport rep = sensitivity_verdict(m, r, 10.0, 1);
  EXPECT_EQ(rep.n_pass, 1u);
  EXPECT_TRUE(rep.overall_pass);
  EXPECT_THROW(sensitivity_verdict(m, std::vector<double>{1.0}, 10.0, 1), InputError);
}

TEST(Sensitivity, UnitMultiplierReproducesHeadline) {
  const GroundTruthModel model = generate_model(small_model());
  const SweepResult s = run_width_sweep(model, small_sweep(), 2);
  const auto scores = s.width_scores();
  const WedgeReport w = wedge_ratio(s.points, 16);
  const SensitivityReport r = threshold_sensitivity(scores.front(), scores.back(), s.calibration.epsilon_abs);
  ASSERT_EQ(r.rows.size(), 5u);
  EXPECT_EQ(r.rows[2].multiplier, 1.0);
  EXPECT_EQ(r.rows[2].ratio, w.causal_ratio);
  EXPECT_EQ(r.rows[2].n_max, w.n_causal_max);
}

TEST(LayerProfile, CountFixedThresholdVaries) {
  GroundTruthSpec spec = small_model();
  spec.depth = 3;
  const GroundTruthModel model = generate_model(spec);
  SweepConfig cfg = small_sweep();
  cfg.m_ref = 64;
  const auto layers = layer_profile(model, cfg, 1);
  ASSERT_EQ(layers.size(), 3u);
  std::set<double> eps;
  for (const auto& l : layers) {
    EXPECT_EQ(l.n_causal, top_fraction_count(64, cfg.percentile));
    eps.insert(l.epsilon_abs);
  }
  EXPECT_EQ(eps.size(), 3u);
  spec.depth = 1;
  EXPECT_THROW(layer_profile(generate_model(spec), cfg, 1), InputError);
}

}  // namespace
}  // namespace kappa
