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

#include <algorithm>

#include "kappa/calibration.hpp"
#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {
namespace {

TEST(Calibrate, DistinctScoresTakeSecondLargest) {
  std::vector<double> scores(100);
  for (std::size_t i = 0; i < 100; ++i) scores[i] = 0.01 * static_cast<double>((i * 37) % 100);
  const Calibration c = calibrate_threshold(scores, 98.0);
  EXPECT_DOUBLE_EQ(c.epsilon_abs, 0.98);
  EXPECT_EQ(c.target_count, 2u);
  EXPECT_EQ(c.realized_count, 2u);
  EXPECT_FALSE(c.degenerate);
  EXPECT_EQ(n_causal(scores, c.epsilon_abs), 2u);
}

TEST(Calibrate, ReferenceWidthTargetCount) {
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores(16384);
  for (double& s : scores) s = u(rng);
  EXPECT_EQ(calibrate_threshold(scores, 98.0).realized_count, 328u);
}

TEST(Calibrate, TiesAreDegenerate) {
  const std::vector<double> equal(50, 0.25);
  const Calibration c = calibrate_threshold(equal, 98.0);
  EXPECT_DOUBLE_EQ(c.epsilon_abs, 0.25);
  EXPECT_EQ(c.realized_count, 50u);
  EXPECT_TRUE(c.degenerate);
  EXPECT_FALSE(c.warnings.empty());
}

TEST(Calibrate, RejectsBadInput) {
  EXPECT_THROW(calibrate_threshold(std::vector<double>{}, 98.0), InputError);
  EXPECT_THROW(calibrate_threshold(std::vector<double>{1.0, 2.0}, 100.0), ConfigError);
  EXPECT_THROW(calibrate_threshold(std::vector<double>{1.0, std::nan("")}, 50.0), InputError);
}

TEST(NCausal, Rules) {
  const std::vector<double> s = {5, 3, 1};
  EXPECT_EQ(n_causal(s, 3.0), 2u);
  EXPECT_EQ(n_causal(s, 6.0), 0u);
  const std::vector<double> with_zero = {0, 0, 2};
  EXPECT_EQ(n_causal(with_zero, 0.0), 3u);
}

TEST(NCausal, MonotoneInEpsilon) {
  Rng rng = make_rng(3);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> s(500);
  for (double& v : s) v = e(rng);
  std::size_t prev = s.size();
  for (double eps = 0.0; eps < 8.0; eps += 0.05) {
    const std::size_t n = n_causal(s, eps);
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Calibrate, IdentityAcrossPercentiles) {
  Rng rng = make_rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t m : {64u, 100u, 333u, 4096u}) {
    std::vector<double> s(m);
    for (double& v : s) v = std::abs(g(rng));
    for (double p : {50.0, 90.0, 95.0, 98.0, 99.5}) {
      const Calibration c = calibrate_threshold(s, p);
      EXPECT_EQ(n_causal(s, c.epsilon_abs), top_fraction_count(m, p));
    }
  }
}

}  // namespace
}  // namespace kappa
