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

#include "kappa/attribution.hpp"
#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/sae.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {
namespace {

GroundTruthSpec toy(std::size_t depth) {
  GroundTruthSpec s;
  s.d = 16;
  s.n_features = 40;
  s.n_causal = 6;
  s.active_per_sample = 4;
  s.vocab_size = 32;
  s.depth = depth;
  s.seed = 5;
  return s;
}

// Per-sample |dL/df_i * f_i| with dL/df_i from central differences along the
// decoder row, evaluated at the point where feature i is removed.
double numeric_atp(const GroundTruthModel& model, const SaeParams& sae, const Vector& h, Index i,
                   const LossFunction& loss) {
  const Vector f = encode(sae, h);
  const Vector clean_h = decode(sae, f);
  const Vector clean_logits = forward(model, clean_h).logits;
  const Vector patched = clean_h - f(i) * sae.w_dec.row(i).transpose();
  const double t = 1e-5;
  const Vector dir = sae.w_dec.row(i).transpose();
  const double up = loss(clean_logits, forward(model, patched + t * dir).logits).value;
  const double down = loss(clean_logits, forward(model, patched - t * dir).logits).value;
  return std::abs((up - down) / (2.0 * t) * f(i));
}

TEST(LossFunctions, KlGradientMatchesFiniteDifferences) {
  Rng rng = make_rng(3);
  const Vector clean = gaussian_matrix(8, 1, rng);
  const Vector patched = gaussian_matrix(8, 1, rng);
  const LossFunction kl = kl_loss(1e-12);
  const LossEvaluation ev = kl(clean, patched);
  EXPECT_GT(ev.value, 0.0);
  EXPECT_NEAR(kl(clean, clean).value, 0.0, 1e-15);
  for (Index j = 0; j < 8; ++j) {
    Vector up = patched, down = patched;
    up(j) += 1e-6;
    down(j) -= 1e-6;
    EXPECT_NEAR(ev.grad_logits(j), (kl(clean, up).value - kl(clean, down).value) / 2e-6, 1e-8);
  }
  const LossFunction ce = clean_target_cross_entropy(1e-12);
  const LossEvaluation cev = ce(clean, patched);
  for (Index j = 0; j < 8; ++j) {
    Vector up = patched, down = patched;
    up(j) += 1e-6;
    down(j) -= 1e-6;
    EXPECT_NEAR(cev.grad_logits(j), (ce(clean, up).value - ce(clean, down).value) / 2e-6, 1e-8);
  }
}

TEST(AtpScores, MatchesNumericGradientOracle) {
  const GroundTruthModel model = generate_model(toy(2));
  const SaeParams sae = init_sae(16, 24, SaeArch::ReluL1, 1);
  const Matrix acts = activation_matrix(sample_batch(model, 6, 2));
  AttributionConfig cfg;
  const AtpScores atp = atp_scores(model, sae, acts, cfg);
  const LossFunction kl = kl_loss(cfg.eps_clamp);
  for (Index i = 0; i < 24; ++i) {
    double expected = 0.0;
    for (Index s = 0; s < acts.rows(); ++s) {
      if (encode(sae, acts.row(s).transpose())(i) != 0.0) expected += numeric_atp(model, sae, acts.row(s).transpose(), i, kl);
    }
    expected /= static_cast<double>(acts.rows());
    EXPECT_NEAR(atp.scores(i), expected, 1e-7 * std::max(1.0, expected));
  }
}

TEST(AtpScores, AffineLossOnLinearHeadIsExact) {
  const GroundTruthModel model = generate_model(toy(1));
  Rng rng = make_rng(9);
  SaeParams sae = init_sae(16, 4, SaeArch::ReluL1, 2);
  sae.b_dec = gaussian_matrix(16, 1, rng, 0.1);
  const Vector w = gaussian_matrix(32, 1, rng);
  const LossFunction affine = [w](const Vector&, const Vector& patched) {
    return LossEvaluation{w.dot(patched), w};
  };
  const Matrix acts = activation_matrix(sample_batch(model, 50, 3));
  const AtpScores atp = atp_scores(model, sae, acts, affine, GradientPoint::Patched);
  const ExactPatchResult exact = exact_patch(model, sae, acts, {0, 1, 2, 3}, affine);
  EXPECT_GT(atp.scores.maxCoeff(), 0.0);
  for (Index i = 0; i < 4; ++i) EXPECT_LT(std::abs(atp.scores(i) - exact.effects(i)), 1e-9);
  const AtpScores at_clean = atp_scores(model, sae, acts, affine, GradientPoint::Clean);
  EXPECT_LT((at_clean.scores - atp.scores).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AtpScores, SilentAndDuplicatedFeatures) {
  const GroundTruthModel model = generate_model(toy(2));
  SaeParams sae = init_sae(16, 12, SaeArch::ReluL1, 4);
  sae.w_enc.row(5).setZero();
  sae.b_enc(5) = -1.0;
  sae.w_enc.row(9) = sae.w_enc.row(8);
  sae.w_dec.row(9) = sae.w_dec.row(8);
  const Matrix acts = activation_matrix(sample_batch(model, 40, 1));
  const AtpScores atp = atp_scores(model, sae, acts, AttributionConfig{});
  EXPECT_EQ(atp.scores(5), 0.0);
  EXPECT_DOUBLE_EQ(atp.scores(8), atp.scores(9));
  EXPECT_GE(atp.scores.minCoeff(), 0.0);
  const ExactPatchResult exact = exact_patch(model, sae, acts, {5, 8, 9}, AttributionConfig{});
  EXPECT_EQ(exact.effects(0), 0.0);
  EXPECT_DOUBLE_EQ(exact.effects(1), exact.effects(2));
}

TEST(ExactPatch, NonnegativeAndNotAdditive) {
  const GroundTruthModel model = generate_model(toy(2));
  const SaeParams sae = init_sae(16, 5, SaeArch::ReluL1, 6);
  const Matrix acts = activation_matrix(sample_batch(model, 30, 8));
  std::vector<std::size_t> all = {0, 1, 2, 3, 4};
  const ExactPatchResult exact = exact_patch(model, sae, acts, all, AttributionConfig{});
  EXPECT_GE(exact.effects.minCoeff(), 0.0);

  // All five features ablated together, against the sum of single ablations.
  const LossFunction kl = kl_loss(1e-12);
  double joint = 0.0;
  for (Index s = 0; s < acts.rows(); ++s) {
    const Vector f = encode(sae, acts.row(s).transpose());
    const Vector clean_logits = forward(model, decode(sae, f)).logits;
    joint += kl(clean_logits, forward(model, sae.b_dec).logits).value;
  }
  joint /= static_cast<double>(acts.rows());
  RecordProperty("sum_single", std::to_string(exact.effects.sum()));
  RecordProperty("joint", std::to_string(joint));
  EXPECT_TRUE(std::isfinite(joint));
  EXPECT_THROW(exact_patch(model, sae, acts, {7}, AttributionConfig{}), InputError);
}

TEST(ValidateAtp, RankIdentities) {
  AtpScores atp;
  atp.scores = Vector::LinSpaced(40, 1.0, 40.0);
  ExactPatchResult same;
  for (std::size_t i = 0; i < 40; ++i) same.features.push_back(i);
  same.effects = atp.scores;
  const ValidationReport r = validate_atp(atp, same, 10.0);
  EXPECT_DOUBLE_EQ(r.spearman_global, 1.0);
  EXPECT_DOUBLE_EQ(r.spearman_top_q, 1.0);
  EXPECT_EQ(r.n_top_q, 4u);
  ExactPatchResult reversed = same;
  reversed.effects = -atp.scores;
  EXPECT_DOUBLE_EQ(validate_atp(atp, reversed, 10.0).spearman_global, -1.0);
  EXPECT_THROW(validate_atp(atp, same, 1.0), StatisticsError);
}

TEST(ValidateAtp, TopDecileBeatsGlobalOnToy) {
  GroundTruthSpec s;
  const GroundTruthModel model = generate_model(s);
  const Matrix train = activation_matrix(sample_batch(model, 4096, 1));
  TrainConfig tc;
  tc.epochs = 5;
  const SaeParams sae = train_sae(init_sae(64, 512, SaeArch::TopK, 2, 8), train, tc).params;
  const Matrix eval = activation_matrix(sample_batch(model, 200, 2));
  const AtpScores atp = atp_scores(model, sae, eval, AttributionConfig{});
  std::vector<std::size_t> all(512);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const ExactPatchResult exact = exact_patch(model, sae, eval, all, AttributionConfig{});
  const ValidationReport r = validate_atp(atp, exact, 5.0);
  RecordProperty("spearman_global", std::to_string(r.spearman_global));
  RecordProperty("spearman_top_q", std::to_string(r.spearman_top_q));
  EXPECT_GT(r.spearman_top_q, 0.8);
}

TEST(AttributionConfig, ParsesLossKinds) {
  EXPECT_EQ(parse_loss_kind("KL_AT_PATCHED"), LossKind::KlAtPatched);
  EXPECT_EQ(parse_loss_kind("CE_CLEAN_TARGET"), LossKind::CeCleanTarget);
  EXPECT_THROW(parse_loss_kind("MSE"), ConfigError);
}

}  // namespace
}  // namespace kappa
