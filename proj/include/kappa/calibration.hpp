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

#ifndef KAPPA_CALIBRATION_HPP
#define KAPPA_CALIBRATION_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kappa {

/// Absolute attribution threshold fixed at a reference width.
struct Calibration {
  double epsilon_abs = 0.0;
  double percentile = 98.0;
  std::size_t reference_width = 0;
  std::size_t target_count = 0;    ///< ceil((1 - p/100) * m_ref)
  std::size_t realized_count = 0;  ///< |{i : score_i >= epsilon_abs}|
  bool degenerate = false;         ///< ties pushed realized_count above target_count
  std::vector<std::string> warnings;
};

/// Nearest-rank percentile: epsilon is the target_count-th largest score, so
/// for distinct scores exactly target_count features clear it.
/// Throws InputError on an empty score vector.
Calibration calibrate_threshold(std::span<const double> scores, double percentile);

/// |{i : score_i >= epsilon_abs}|
std::size_t n_causal(std::span<const double> scores, double epsilon_abs);

}  // namespace kappa

#endif  // KAPPA_CALIBRATION_HPP
