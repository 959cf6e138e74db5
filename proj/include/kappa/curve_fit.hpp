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

#ifndef KAPPA_CURVE_FIT_HPP
#define KAPPA_CURVE_FIT_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kappa {

struct CurvePoint {
  double m = 0.0;  ///< SAE width
  double n = 0.0;  ///< causal count at that width
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double x) const { return lo <= x && x <= hi; }
  [[nodiscard]] double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

enum class ExcludeRule {
  None,
  PostMinimum,  ///< drop every width at or below the width of minimum count
};

std::string to_string(ExcludeRule rule);
ExcludeRule parse_exclude_rule(const std::string& name);

struct FitOptions {
  ExcludeRule exclude = ExcludeRule::PostMinimum;
  double kappa_max = std::numeric_limits<double>::infinity();
  double tau_max = 1e9;
  std::size_t max_iterations = 2000;
  double wald_level = 0.95;
};

struct FitResult {
  double kappa_hat = 0.0;
  double tau_hat = 0.0;
  double kappa_se = 0.0;
  double tau_se = 0.0;
  Interval wald_ci_95;      ///< on kappa, lower end truncated at 0
  Interval tau_wald_ci_95;  ///< on tau, lower end truncated at 0
  std::optional<Interval> bootstrap_ci_95;
  std::optional<double> bootstrap_median;
  std::size_t n_points_used = 0;
  std::vector<double> excluded_pre_minimum;  ///< widths dropped by the exclusion rule
  double rss = 0.0;
  std::size_t iterations = 0;
  bool at_bound = false;
  std::vector<std::string> warnings;
};

/// kappa * (1 - exp(-m / tau))
double saturating_curve(double m, double kappa, double tau);

/// Points kept by \p rule, in input order; dropped widths go to \p excluded.
std::vector<CurvePoint> apply_exclusion(std::span<const CurvePoint> points, ExcludeRule rule,
                                        std::vector<double>* excluded = nullptr);

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of the saturating curve with
/// an analytic Jacobian, multi-started over tau in {m_max/10, m_max, 10 m_max}
/// with kappa starting at the largest observed count. Needs at least 3 points
/// after exclusion. Throws FitError (with the residual trace) if no start
/// converges.
FitResult fit_saturating(std::span<const CurvePoint> points, const FitOptions& options = {});

/// kappa (1 - exp(-m/tau)) - a exp(-(m - m0)^2 / (2 s^2))
double dip_curve(double m, double kappa, double tau, double a, double m0, double s);

struct DipFitResult {
  double kappa_hat = 0.0;
  double tau_hat = 0.0;
  double dip_amplitude = 0.0;
  double dip_center = 0.0;
  double dip_width = 0.0;
  double rss = 0.0;
  std::size_t n_points_used = 0;
  bool at_bound = false;
};

/// Saturating curve with a Gaussian dip, fitted to all points (no exclusion).
/// Needs at least 6 points.
DipFitResult fit_saturating_with_dip(std::span<const CurvePoint> points, const FitOptions& options = {});

}  // namespace kappa

#endif  // KAPPA_CURVE_FIT_HPP
