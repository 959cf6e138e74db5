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
#include <numeric>
#include <set>

#include "kappa/errors.hpp"
#include "kappa/parallel.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {
namespace {

TEST(Random, DeriveSeedIsDeterministicAndSpreads) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(0, s));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(0, 1));
}

TEST(Random, OrthonormalFrameAndComplement) {
  Rng rng = make_rng(3);
  const Matrix frame = random_orthonormal_frame(5, 12, rng);
  EXPECT_LT((frame * frame.transpose() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix comp = orthogonal_complement(frame);
  ASSERT_EQ(comp.rows(), 7);
  EXPECT_LT((comp * frame.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((comp * comp.transpose() - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Random, UnitRowsAndPermutation) {
  Rng rng = make_rng(5);
  const Matrix rows = random_unit_rows(20, 8, rng);
  for (Index i = 0; i < rows.rows(); ++i) EXPECT_NEAR(rows.row(i).norm(), 1.0, 1e-12);
  auto perm = random_permutation(50, rng);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(perm[i], i);
}

TEST(Stats, AverageRanksHandlesTies) {
  const std::vector<double> v = {10, 20, 20, 5};
  const auto r = average_ranks(v);
  EXPECT_DOUBLE_EQ(r[0], 2.0);
  EXPECT_DOUBLE_EQ(r[1], 3.5);
  EXPECT_DOUBLE_EQ(r[2], 3.5);
  EXPECT_DOUBLE_EQ(r[3], 1.0);
}

TEST(Stats, SpearmanIdentityAndReversal) {
  const std::vector<double> a = {0.3, 1.2, 5.0, 2.2, 0.1};
  std::vector<double> rev(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) rev[i] = -a[i];
  EXPECT_DOUBLE_EQ(spearman(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, rev), -1.0);
  const std::vector<double> flat(5, 1.0);
  EXPECT_THROW(spearman(a, flat), StatisticsError);
}

TEST(Stats, PearsonMatchesClosedForm) {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {2, 4, 5, 9};
  // sxy = 11, sxx = 5, syy = 26
  EXPECT_NEAR(pearson(x, y), 11.0 / std::sqrt(5.0 * 26.0), 1e-14);
}

TEST(Stats, TopFractionCount) {
  EXPECT_EQ(top_fraction_count(100, 98.0), 2u);
  EXPECT_EQ(top_fraction_count(16384, 98.0), 328u);
  EXPECT_EQ(top_fraction_count(64, 98.0), 2u);
  EXPECT_EQ(top_fraction_count(10, 99.99), 1u);
  EXPECT_EQ(top_fraction_count(10, 0.0), 10u);
}

TEST(Stats, TopIndicesBreaksTiesByIndex) {
  const std::vector<double> v = {1, 3, 3, 2};
  const auto top = top_indices(v, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0], 1u);
  EXPECT_EQ(top[1], 2u);
}

TEST(Stats, PercentileAndInterval) {
  std::vector<double> v(101);
  std::iota(v.begin(), v.end(), 0.0);
  EXPECT_DOUBLE_EQ(percentile_linear(v, 50.0), 50.0);
  EXPECT_DOUBLE_EQ(percentile_linear(v, 2.5), 2.5);
  const auto [lo, hi] = percentile_interval(v, 0.95);
  EXPECT_NEAR(lo, 2.5, 1e-9);
  EXPECT_NEAR(hi, 97.5, 1e-9);
}

TEST(Stats, JaccardAndMoments) {
  EXPECT_DOUBLE_EQ(jaccard({1, 2, 3}, {2, 3, 4}), 0.5);
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(v), 5.0);
  EXPECT_NEAR(stddev(v), std::sqrt(32.0 / 7.0), 1e-14);
}

TEST(Stats, NormalQuantile) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
  EXPECT_NEAR(normal_quantile(0.05), -1.6448536269514722, 1e-9);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  for (std::size_t jobs : {1u, 3u}) {
    try {
      parallel_for(10, jobs, [](std::size_t i) {
        if (i == 4 || i == 7) throw InputError("fail " + std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const InputError& e) {
      EXPECT_STREQ(e.what(), "fail 4");
    }
  }
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
}  // namespace kappa
