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

#ifndef KAPPA_BOOTSTRAP_HPP
#define KAPPA_BOOTSTRAP_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kappa/curve_fit.hpp"

namespace kappa {

/// Per-feature attribution scores of one SAE width.
struct WidthScores {
  double m = 0.0;
  std::vector<double> scores;
};

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::size_t jobs = 1;
  FitOptions fit;
};

struct BootstrapResult {
  FitResult point;                     ///< fit on the original trajectory
  Interval kappa_ci;
  double kappa_median = 0.0;
  Interval tau_ci;
  std::size_t n_success = 0;
  std::size_t n_replicates = 0;
  std::vector<double> kappa_samples;  ///< successful replicates, in replicate order
  std::vector<double> tau_samples;

  /// Percentile interval of kappa at another level over the same replicates.
  [[nodiscard]] Interval kappa_interval(double level) const;
};

/// Causal counts of each width at \p epsilon_abs.
std::vector<CurvePoint> count_trajectory(std::span<const WidthScores> widths, double epsilon_abs);

/// Feature bootstrap of the saturating fit. Replicate r draws from seed + r:
/// features are resampled with replacement within each width independently,
/// counts are recomputed at the fixed epsilon, and the curve is refitted on the
/// widths kept by the exclusion rule applied to the original trajectory.
/// Throws ConfigError for fewer than 100 replicates and StatisticsError when
/// fewer than half of the refits succeed.
BootstrapResult bootstrap_fit(std::span<const WidthScores> widths, double epsilon_abs,
                              const BootstrapOptions& options = {});

/// Percentile interval of N(max)/N(ref) under the same feature resampling.
/// Replicates with a zero reference count are skipped; fewer than half valid
/// throws StatisticsError.
struct RatioInterval {
  Interval ci;
  double median = 0.0;
  std::size_t n_valid = 0;
};
RatioInterval bootstrap_count_ratio(const WidthScores& ref, const WidthScores& max, double epsilon_abs,
                                    std::size_t replicates, std::uint64_t seed, double level = 0.95);

}  // namespace kappa

#endif  // KAPPA_BOOTSTRAP_HPP
