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

#ifndef KAPPA_SWEEP_HPP
#define KAPPA_SWEEP_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kappa/attribution.hpp"
#include "kappa/bootstrap.hpp"
#include "kappa/calibration.hpp"
#include "kappa/sae.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {

struct SweepConfig {
  std::vector<std::size_t> widths = {64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t m_ref = 64;
  double percentile = 98.0;
  SaeArch arch = SaeArch::TopK;
  std::size_t k = 8;
  double lambda_l1 = 1e-3;
  std::vector<std::uint64_t> seeds = {0};
  double alive_threshold = 1e-4;
  std::size_t n_train = 8192;
  std::size_t n_eval = 2048;
  TrainConfig train;
  AttributionConfig attribution;
  bool operator==(const SweepConfig&) const = default;
};

/// Every violated invariant of \p config, phrased with the field name.
std::vector<std::string> sweep_violations(const SweepConfig& config);
void validate(const SweepConfig& config);

struct WidthPoint {
  std::size_t m = 0;
  std::size_t n_causal = 0;
  std::size_t n_repr = 0;
  double epsilon_abs = 0.0;
  double kappa_pr = 0.0;  ///< participation ratio of the AtP scores
  double mean_l0 = 0.0;
  double mse = 0.0;
  bool operator==(const WidthPoint&) const = default;
};

/// Everything produced for one width, kept for controls and persistence.
struct WidthRun {
  std::size_t m = 0;
  SaeParams sae;
  SaeMetrics metrics;  ///< held-out training metrics
  AtpScores atp;
  FiringStats firing;  ///< on the evaluation batch
  std::vector<double> learning_curve;
};

struct SweepResult {
  std::uint64_t seed = 0;
  Calibration calibration;
  std::vector<WidthPoint> points;
  std::vector<WidthRun> runs;

  [[nodiscard]] std::vector<WidthScores> width_scores() const;
  [[nodiscard]] std::vector<CurvePoint> causal_curve() const;
};

struct SweepHooks {
  std::size_t jobs = 1;
  /// Called (from the caller's thread, in width order) for every width that trained.
  std::function<void(const WidthRun&)> on_width_trained;
};

/// Data the sweep draws from a seed: the training and evaluation activations at
/// the configured probe.
struct SweepData {
  Matrix train;
  Matrix eval;
};
SweepData sweep_data(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed);

/// Trains one SAE of width \p m on data.train (seeded from \p seed and m),
/// then scores it by AtP and firing frequency on data.eval.
WidthRun train_width(const GroundTruthModel& model, const SweepConfig& config, const SweepData& data, std::size_t m,
                     std::uint64_t seed);

/// Trains one SAE per width, scores every feature by AtP on the evaluation
/// batch, calibrates epsilon once at m_ref and counts every width against that
/// single absolute threshold. Widths run as independent jobs with their own
/// seed streams. A width whose training fails raises SweepError naming it,
/// after the widths that did train were handed to the hook.
SweepResult run_width_sweep(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed,
                            const SweepHooks& hooks = {});

struct WedgeReport {
  std::size_t m_ref = 0;
  std::size_t m_max = 0;
  std::size_t n_causal_ref = 0;
  std::size_t n_causal_max = 0;
  double causal_ratio = 0.0;
  std::size_t n_repr_ref = 0;
  std::size_t n_repr_max = 0;
  double repr_ratio = 0.0;  ///< NaN when n_repr_ref is 0
  double width_ratio = 0.0;
  std::optional<RatioInterval> causal_ci;
};

/// N_causal(m_max) / N_causal(m_ref) alongside the N_repr ratio. Throws
/// InputError for fewer than two points or a missing m_ref, UndefinedError
/// when N_causal(m_ref) is 0.
WedgeReport wedge_ratio(std::span<const WidthPoint> points, std::size_t m_ref);

struct SensitivityRow {
  double multiplier = 1.0;
  double epsilon_abs = 0.0;
  std::size_t n_ref = 0;
  std::size_t n_max = 0;
  double ratio = 0.0;  ///< infinite when n_ref is 0
  bool pass = false;
};

struct SensitivityReport {
  std::vector<SensitivityRow> rows;
  std::size_t n_pass = 0;
  bool overall_pass = false;
  double ratio_limit = 10.0;
  std::size_t min_pass = 4;
};

inline const std::vector<double> kDefaultMultipliers = {0.1, 0.3, 1.0, 3.0, 10.0};

/// Pre-registered verdict: a multiplier passes when its ratio is below
/// \p ratio_limit; the whole check passes when at least \p min_pass do.
SensitivityReport sensitivity_verdict(std::span<const double> multipliers, std::span<const double> ratios,
                                      double ratio_limit = 10.0, std::size_t min_pass = 4);

/// Recounts both widths at epsilon * multiplier and applies the verdict.
SensitivityReport threshold_sensitivity(const WidthScores& ref, const WidthScores& max, double epsilon_abs,
                                        std::span<const double> multipliers = kDefaultMultipliers,
                                        double ratio_limit = 10.0, std::size_t min_pass = 4);

struct LayerPoint {
  std::size_t probe = 0;
  double epsilon_abs = 0.0;
  std::size_t n_causal = 0;
  std::size_t n_repr = 0;
  double kappa_pr = 0.0;
};

/// One SAE of width m_ref per probe point, each calibrated independently.
/// Throws InputError if the model exposes fewer than two probes.
std::vector<LayerPoint> layer_profile(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed,
                                      std::size_t jobs = 1);

}  // namespace kappa

#endif  // KAPPA_SWEEP_HPP
