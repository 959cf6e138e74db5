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

#ifndef KAPPA_STATS_HPP
#define KAPPA_STATS_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace kappa {

/// 1-based ranks with ties assigned their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation. Throws StatisticsError on fewer than two points or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman correlation: Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation percentile (numpy's default), p in [0, 100]. Copies and sorts.
double percentile_linear(std::vector<double> values, double p);

/// Number of entries in the top (100 - p)% of n items: ceil((100 - p) * n / 100),
/// clamped to [1, n]. Computed so that p = 98, n = 100 gives exactly 2.
std::size_t top_fraction_count(std::size_t n, double p);

/// Indices of the \p count largest values; ties go to the lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count);

/// |A n B| / |A u B| of two index sets.
double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b);

/// Equal-tailed percentile interval at \p level (e.g. 0.95) over \p samples.
std::pair<double, double> percentile_interval(std::span<const double> samples, double level);

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> values);

/// Standard normal upper quantile, e.g. 0.975 -> 1.959964.
double normal_quantile(double p);

}  // namespace kappa

#endif  // KAPPA_STATS_HPP
