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

#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/spectral.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {
namespace {

TEST(AccumulateSigma, Identities) {
  Matrix embed = Matrix::Zero(6, 4);
  embed.topRows(4) = Matrix::Identity(4, 4);
  const std::vector<Matrix> one = {embed};
  EXPECT_EQ(accumulate_sigma(one), Matrix::Identity(4, 4));

  Matrix a = Matrix::Zero(1, 3), b = Matrix::Zero(1, 3);
  a(0, 0) = 1.0;
  b(0, 1) = 2.0;
  const std::vector<Matrix> pair = {a, b};
  EXPECT_EQ(eigenspectrum(accumulate_sigma(pair)).eigenvalues.size(), 2u);

  Rng rng = make_rng(1);
  const Matrix j = gaussian_matrix(5, 3, rng);
  const std::vector<Matrix> copies(7, j);
  EXPECT_LT((accumulate_sigma(copies) - j.transpose() * j).cwiseAbs().maxCoeff(), 1e-12);

  const std::vector<Matrix> mismatched = {j, Matrix::Zero(4, 3)};
  EXPECT_THROW(accumulate_sigma(mismatched), InputError);
  EXPECT_THROW(accumulate_sigma(std::span<const Matrix>{}), InputError);
}

TEST(Eigenspectrum, DiagonalAndConjugated) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1.0, 3.0, 2.0;
  const Spectrum s = eigenspectrum(d);
  ASSERT_EQ(s.eigenvalues.size(), 3u);
  EXPECT_NEAR(s.eigenvalues[0], 3.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[1], 2.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[2], 1.0, 1e-12);
  EXPECT_NEAR(s.trace, 6.0, 1e-12);

  Rng rng = make_rng(2);
  const Matrix q = random_orthonormal_frame(3, 3, rng);
  const Spectrum r = eigenspectrum(q.transpose() * d * q);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.eigenvalues[i], s.eigenvalues[i], 1e-9);

  Matrix asym = d;
  asym(0, 1) = 1.0;
  EXPECT_THROW(eigenspectrum(asym), InputError);
}

TEST(Eigenspectrum, PlantedLinearModelHasExactRank) {
  GroundTruthSpec spec;
  spec.d = 32;
  spec.n_features = 100;
  spec.n_causal = 4;
  spec.depth = 1;
  spec.vocab_size = 64;
  const GroundTruthModel model = generate_model(spec);
  const Spectrum s = eigenspectrum(sigma_true(model, sample_batch(model, 50, 1)));
  EXPECT_EQ(s.eigenvalues.size(), 4u);
}

TEST(EffectiveRank, ClosedForms) {
  EXPECT_NEAR(effective_rank(spectrum_from_eigenvalues({1, 1, 1, 0, 0}, 5)), 3.0, 1e-12);
  const double h = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  EXPECT_NEAR(effective_rank(spectrum_from_eigenvalues({0.9, 0.1}, 2)), std::exp(h), 1e-12);
  EXPECT_NEAR(effective_rank(spectrum_from_eigenvalues({0.9, 0.1}, 2)), 1.3842, 1e-4);
  const double base = effective_rank(spectrum_from_eigenvalues({5, 2, 0.5}, 3));
  EXPECT_NEAR(effective_rank(spectrum_from_eigenvalues({50, 20, 5}, 3)), base, 1e-12);
  EXPECT_THROW(effective_rank(spectrum_from_eigenvalues({0, 0}, 2)), UndefinedError);
}

TEST(SpectralCount, BoundaryIsInclusive) {
  const Spectrum s = spectrum_from_eigenvalues({3, 2, 1}, 3);
  EXPECT_EQ(spectral_count(s, 2.0), 2u);
  EXPECT_EQ(spectral_count(s, 0.0), 3u);
  EXPECT_EQ(spectral_count(s, 3.5), 0u);
}

TEST(ParticipationRatio, ClosedForms) {
  const std::vector<double> equal(7, 0.3);
  EXPECT_NEAR(participation_ratio(equal), 7.0, 1e-12);
  const std::vector<double> one = {0, 0, 4, 0};
  EXPECT_DOUBLE_EQ(participation_ratio(one), 1.0);
  const std::vector<double> three_one = {3, 1};
  EXPECT_DOUBLE_EQ(participation_ratio(three_one), 1.6);
  const std::vector<double> zeros(3, 0.0);
  EXPECT_THROW(participation_ratio(zeros), UndefinedError);
  const std::vector<double> negative = {1, -1};
  EXPECT_THROW(participation_ratio(negative), InputError);
}

TEST(DimensionBound, PassesAtEqualityAndFailsWhenCorrupted) {
  const Spectrum s = eigenspectrum(Matrix::Identity(6, 6));
  KappaEstimate est = estimate_kappa(s, {}, 0.5);
  EXPECT_NEAR(est.eff_rank, 6.0, 1e-12);
  EXPECT_TRUE(check_dimension_bound(est, 6, 100).ok);
  est.eff_rank = 7.0;
  const BoundReport bad = check_dimension_bound(est, 6, 100);
  EXPECT_FALSE(bad.ok);
  EXPECT_NE(bad.report.find("dimension upper bound"), std::string::npos);
  est.eff_rank = 5.0;
  EXPECT_FALSE(check_dimension_bound(est, 6, 4).ok);
}

TEST(EntropyEffectiveCount, MatchesEffectiveRank) {
  const std::vector<double> v = {4, 1, 1, 0};
  EXPECT_NEAR(entropy_effective_count(v), effective_rank(spectrum_from_eigenvalues({4, 1, 1}, 3)), 1e-12);
}

}  // namespace
}  // namespace kappa
