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

#include "kappa/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "kappa/errors.hpp"
#include "kappa/stats.hpp"

namespace kappa {

Calibration calibrate_threshold(std::span<const double> scores, double percentile) {
  if (scores.empty()) throw InputError("calibrate_threshold: empty score vector");
  if (!(percentile >= 0.0 && percentile < 100.0)) throw ConfigError("calibrate_threshold: percentile in [0, 100)");
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("calibrate_threshold: non-finite score");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  Calibration out;
  out.percentile = percentile;
  out.reference_width = scores.size();
  out.target_count = top_fraction_count(scores.size(), percentile);
  out.epsilon_abs = sorted[out.target_count - 1];
  out.realized_count = n_causal(scores, out.epsilon_abs);
  if (out.realized_count != out.target_count) {
    out.degenerate = true;
    out.warnings.push_back("tied scores at the calibration cut: " + std::to_string(out.realized_count) +
                           " features clear epsilon instead of " + std::to_string(out.target_count));
  }
  if (out.epsilon_abs == 0.0) {
    out.warnings.push_back("calibrated epsilon is 0: the cut selects every feature");
  }
  return out;
}

std::size_t n_causal(std::span<const double> scores, double epsilon_abs) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [epsilon_abs](double s) { return s >= epsilon_abs; }));
}

}  // namespace kappa
