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

#include "kappa/calibration.hpp"
#include "kappa/controls.hpp"
#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/sweep.hpp"

namespace kappa {
namespace {

struct Trained {
  GroundTruthModel model;
  SaeParams sae;
  Matrix eval;
  AtpScores atp;
};

const Trained& trained() {
  static const Trained t = [] {
    GroundTruthSpec s;
    s.d = 16;
    s.n_features = 60;
    s.n_causal = 6;
    s.active_per_sample = 3;
    s.vocab_size = 32;
    Trained out{generate_model(s), {}, {}, {}};
    SweepConfig c;
    c.k = 4;
    c.n_train = 2048;
    c.n_eval = 256;
    c.train.epochs = 4;
    const SweepData data = sweep_data(out.model, c, 3);
    const WidthRun run = train_width(out.model, c, data, 128, 3);
    out.sae = run.sae;
    out.eval = data.eval;
    out.atp = run.atp;
    return out;
  }();
  return t;
}

TEST(FourCell, ShapeAndIdentityPermutation) {
  const Trained& t = trained();
  const double eps = calibrate_threshold(std::vector<double>(t.atp.scores.begin(), t.atp.scores.end()), 90.0).epsilon_abs;
  std::vector<std::size_t> identity(128);
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  const FourCellResult r = four_cell(t.model, t.sae, t.eval, eps, 1, identity);
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_EQ(r.cells[0].label, "REAL");
  EXPECT_EQ(r.cells[3].label, "RANDOM_ENC");
  for (const auto& c : r.cells) EXPECT_EQ(c.m, 128u);
  EXPECT_EQ(r.cell("SHUFFLED_DEC").n_causal, r.cell("REAL").n_causal);
  EXPECT_EQ(r.cell("SHUFFLED_DEC").n_repr, r.cell("REAL").n_repr);
  EXPECT_EQ(r.epsilon_abs, eps);
  EXPECT_THROW((void)r.cell("NONE"), InputError);
}

TEST(FourCell, RandomEncoderFillsTheDictionary) {
  const Trained& t = trained();
  const double eps = calibrate_threshold(std::vector<double>(t.atp.scores.begin(), t.atp.scores.end()), 90.0).epsilon_abs;
  const FourCellResult r = four_cell(t.model, t.sae, t.eval, eps, 2);
  EXPECT_GT(r.cell("RANDOM_ENC").n_repr, 0.9 * 128);
}

TEST(Recovery, OracleScorerIsPerfect) {
  GroundTruthSpec s;
  const GroundTruthModel model = generate_model(s);
  const Matrix truth = causal_directions(model);
  std::vector<std::size_t> all(50);
  for (std::size_t i = 0; i < 50; ++i) all[i] = i;
  for (double thr : {0.3, 0.5, 0.7, 1.0}) {
    const RecoveryCell c = score_recovery(truth, all, truth, thr);
    EXPECT_DOUBLE_EQ(c.precision, 1.0);
    EXPECT_DOUBLE_EQ(c.recall, 1.0);
    EXPECT_EQ(c.matched_pairs.size(), 50u);
  }
  const Matrix flipped = -truth;
  EXPECT_DOUBLE_EQ(score_recovery(flipped, all, truth, 0.7).recall, 1.0);
}

TEST(Recovery, RandomRowsRecoverAlmostNothing) {
  GroundTruthSpec s;
  const Matrix truth = causal_directions(generate_model(s));
  Rng rng = make_rng(7);
  const Matrix rows = random_unit_rows(1000, 64, rng);
  std::vector<std::size_t> all(1000);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const RecoveryCell c = score_recovery(rows, all, truth, 0.7);
  EXPECT_LT(c.recall, 0.05);
}

TEST(Recovery, EmptySelection) {
  GroundTruthSpec s;
  const Matrix truth = causal_directions(generate_model(s));
  const RecoveryCell c = score_recovery(truth, {}, truth, 0.5);
  EXPECT_EQ(c.n_selected, 0u);
  EXPECT_EQ(c.precision, 0.0);
  EXPECT_EQ(c.recall, 0.0);
}

TEST(Recovery, GridShape) {
  GroundTruthSpec s;
  s.d = 16;
  s.n_features = 60;
  s.n_causal = 6;
  s.active_per_sample = 3;
  s.vocab_size = 32;
  RecoveryOptions o;
  o.widths = {16, 32};
  o.seeds = {0, 1};
  o.n_train = 512;
  o.n_eval = 64;
  o.train.epochs = 2;
  const auto cells = synthetic_recovery(s, o);
  EXPECT_EQ(cells.size(), 2u * 2u * 3u);
  for (const auto& c : cells) {
    EXPECT_GE(c.recall, 0.0);
    EXPECT_LE(c.recall, 1.0);
  }
}

TEST(Privilege, UnitNormDecoderHasZeroNormGap) {
  const Trained& t = trained();
  const Vector mags = feature_magnitudes(t.sae, t.eval);
  const PrivilegeReport r = geometric_privilege(t.sae, mags, {0, 5, 9, 20}, 4, 200);
  EXPECT_NEAR(r.norm_gap, 0.0, 1e-6);
  EXPECT_EQ(r.control_set.size(), 4u);
  for (std::size_t c : r.control_set) {
    EXPECT_EQ(std::count(r.causal_set.begin(), r.causal_set.end(), c), 0);
  }
  EXPECT_GE(r.cosine_gap_se, 0.0);
}

TEST(Privilege, RandomLabelsGiveNullGap) {
  const Trained& t = trained();
  const Vector mags = feature_magnitudes(t.sae, t.eval);
  Rng rng = make_rng(11);
  int within = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto perm = random_permutation(128, rng);
    perm.resize(20);
    const PrivilegeReport r = geometric_privilege(t.sae, mags, perm, static_cast<std::uint64_t>(trial), 500);
    if (std::abs(r.cosine_gap) <= 2.0 * r.cosine_gap_se + 1e-12) ++within;
  }
  EXPECT_GE(within, 8);
}

TEST(Privilege, MatchingErrors) {
  const Trained& t = trained();
  const Vector mags = feature_magnitudes(t.sae, t.eval);
  EXPECT_THROW(geometric_privilege(t.sae, mags, {1}, 0), MatchingError);
  std::vector<std::size_t> too_many(65);
  for (std::size_t i = 0; i < too_many.size(); ++i) too_many[i] = i;
  EXPECT_THROW(geometric_privilege(t.sae, mags, too_many, 0), MatchingError);
  EXPECT_THROW(geometric_privilege(t.sae, mags, {1, 1}, 0), InputError);
}

TEST(Sparsity, MedianMembershipCorrelatesPositively) {
  Rng rng = make_rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SparsityEntry> entries;
  for (const char* arch : {"TOPK", "RELU_L1"}) {
    SparsityEntry e{arch, Vector(64), Vector(64), 0.5};
    for (Index i = 0; i < 64; ++i) e.firing_freq(i) = u(rng);
    std::vector<double> f(e.firing_freq.begin(), e.firing_freq.end());
    std::nth_element(f.begin(), f.begin() + 32, f.end());
    for (Index i = 0; i < 64; ++i) e.scores(i) = e.firing_freq(i) >= f[32] ? 1.0 : 0.0;
    entries.push_back(std::move(e));
  }
  const SparsityReport r = sparsity_dependence(entries);
  ASSERT_EQ(r.per_arch.size(), 2u);
  EXPECT_GT(r.per_arch[0].second, 0.5);
  EXPECT_GT(r.global, 0.5);
}

TEST(Sparsity, ConstantFiringIsUndefined) {
  SparsityEntry a{"TOPK", Vector::Constant(10, 0.1), Vector::LinSpaced(10, 0.0, 1.0), 0.5};
  SparsityEntry b = a;
  b.arch = "RELU_L1";
  EXPECT_THROW(sparsity_dependence({a, b}), StatisticsError);
  EXPECT_THROW(sparsity_dependence({a}), InputError);
}

}  // namespace
}  // namespace kappa
