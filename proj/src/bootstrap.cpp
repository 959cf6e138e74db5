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

#include "kappa/bootstrap.hpp"

#include <algorithm>
#include <string>

#include "kappa/calibration.hpp"
#include "kappa/errors.hpp"
#include "kappa/parallel.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {

namespace {

std::size_t resampled_count(const std::vector<double>& scores, double epsilon, Rng& rng) {
  if (scores.empty()) return 0;
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  std::size_t count = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[pick(rng)] >= epsilon) ++count;
  }
  return count;
}

double median_of(std::vector<double> v) { return percentile_linear(std::move(v), 50.0); }

}  // namespace

Interval BootstrapResult::kappa_interval(double level) const {
  const auto [lo, hi] = percentile_interval(kappa_samples, level);
  return {lo, hi};
}

std::vector<CurvePoint> count_trajectory(std::span<const WidthScores> widths, double epsilon_abs) {
  std::vector<CurvePoint> out;
  out.reserve(widths.size());
  for (const auto& w : widths) out.push_back({w.m, static_cast<double>(n_causal(w.scores, epsilon_abs))});
  return out;
}

BootstrapResult bootstrap_fit(std::span<const WidthScores> widths, double epsilon_abs, const BootstrapOptions& options) {
  if (options.replicates < 100) {
    throw ConfigError("bootstrap replicates >= 100 (got " + std::to_string(options.replicates) + ")");
  }
  BootstrapResult result;
  result.n_replicates = options.replicates;
  const auto original = count_trajectory(widths, epsilon_abs);
  result.point = fit_saturating(original, options.fit);

  // Widths kept on the original trajectory stay fixed across replicates.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const auto& ex = result.point.excluded_pre_minimum;
    if (std::find(ex.begin(), ex.end(), widths[i].m) == ex.end()) kept.push_back(i);
  }
  FitOptions replicate_fit = options.fit;
  replicate_fit.exclude = ExcludeRule::None;

  std::vector<std::optional<std::pair<double, double>>> fits(options.replicates);
  parallel_for(options.replicates, options.jobs, [&](std::size_t r) {
    std::vector<CurvePoint> pts;
    pts.reserve(kept.size());
    for (std::size_t i : kept) {
      Rng rng = make_rng(options.seed + r, i);
      pts.push_back({widths[i].m, static_cast<double>(resampled_count(widths[i].scores, epsilon_abs, rng))});
    }
    try {
      const FitResult f = fit_saturating(pts, replicate_fit);
      fits[r] = std::make_pair(f.kappa_hat, f.tau_hat);
    } catch (const FitError&) {
    }
  });
  for (const auto& f : fits) {
    if (!f) continue;
    result.kappa_samples.push_back(f->first);
    result.tau_samples.push_back(f->second);
  }
  result.n_success = result.kappa_samples.size();
  if (2 * result.n_success < options.replicates) {
    throw StatisticsError("bootstrap degenerate: " + std::to_string(result.n_success) + " of " +
                          std::to_string(options.replicates) + " refits succeeded");
  }
  result.kappa_ci = result.kappa_interval(options.level);
  const auto [tlo, thi] = percentile_interval(result.tau_samples, options.level);
  result.tau_ci = {tlo, thi};
  result.kappa_median = median_of(result.kappa_samples);
  result.point.bootstrap_ci_95 = result.kappa_interval(0.95);
  result.point.bootstrap_median = result.kappa_median;
  return result;
}

RatioInterval bootstrap_count_ratio(const WidthScores& ref, const WidthScores& max, double epsilon_abs,
                                    std::size_t replicates, std::uint64_t seed, double level) {
  if (replicates < 100) throw ConfigError("bootstrap replicates >= 100 (got " + std::to_string(replicates) + ")");
  std::vector<double> ratios;
  ratios.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng_ref = make_rng(seed + r, 0);
    Rng rng_max = make_rng(seed + r, 1);
    const auto n_ref = resampled_count(ref.scores, epsilon_abs, rng_ref);
    const auto n_max = resampled_count(max.scores, epsilon_abs, rng_max);
    if (n_ref == 0) continue;
    ratios.push_back(static_cast<double>(n_max) / static_cast<double>(n_ref));
  }
  if (2 * ratios.size() < replicates) {
    throw StatisticsError("ratio bootstrap degenerate: reference count is zero in most replicates");
  }
  RatioInterval out;
  const auto [lo, hi] = percentile_interval(ratios, level);
  out.ci = {lo, hi};
  out.n_valid = ratios.size();
  out.median = median_of(std::move(ratios));
  return out;
}

}  // namespace kappa
