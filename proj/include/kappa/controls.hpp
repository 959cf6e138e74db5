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

#ifndef KAPPA_CONTROLS_HPP
#define KAPPA_CONTROLS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kappa/attribution.hpp"
#include "kappa/sae.hpp"
#include "kappa/sweep.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {

struct CellCount {
  std::string label;  ///< REAL, RANDOM_DEC, SHUFFLED_DEC or RANDOM_ENC
  std::size_t m = 0;
  std::size_t n_causal = 0;
  std::size_t n_repr = 0;
  double utilisation = 0.0;  ///< n_repr / m
};

struct FourCellResult {
  double epsilon_abs = 0.0;
  std::vector<CellCount> cells;  ///< REAL, RANDOM_DEC, SHUFFLED_DEC, RANDOM_ENC

  [[nodiscard]] const CellCount& cell(const std::string& label) const;
};

struct FourCellOptions {
  AttributionConfig attribution;
  double alive_threshold = 1e-4;
};

/// Scores the trained SAE and its three randomized controls on \p activations
/// against the same absolute threshold.
FourCellResult four_cell(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                         double epsilon_abs, std::uint64_t seed, const FourCellOptions& options = {});

/// Same, with an explicit decoder permutation for the SHUFFLED_DEC cell.
FourCellResult four_cell(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                         double epsilon_abs, std::uint64_t seed, const std::vector<std::size_t>& permutation,
                         const FourCellOptions& options = {});

struct MatchedPair {
  std::size_t sae_feature = 0;
  std::size_t ground_truth = 0;
  double cosine = 0.0;  ///< absolute cosine
};

struct RecoveryCell {
  std::size_t width = 0;
  std::uint64_t seed = 0;
  double cosine_threshold = 0.0;
  std::size_t n_selected = 0;
  double precision = 0.0;  ///< 0 when nothing is selected
  double recall = 0.0;
  std::vector<MatchedPair> matched_pairs;
};

/// Greedy one-to-one matching by absolute cosine, highest first, between the
/// decoder rows of \p selected and the rows of \p ground_truth. Recall is the
/// matched fraction of ground-truth rows; precision is the fraction of
/// selected rows whose best absolute cosine to any ground-truth row clears the
/// threshold.
RecoveryCell score_recovery(const Matrix& decoder, const std::vector<std::size_t>& selected,
                            const Matrix& ground_truth, double cosine_threshold);

/// Ground-truth causal directions of \p model (the causal dictionary atoms).
Matrix causal_directions(const GroundTruthModel& model);

struct RecoveryOptions {
  std::vector<std::size_t> widths = {16, 32, 64, 128, 256, 512, 1024, 2048};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<double> cosine_thresholds = {0.3, 0.5, 0.7};
  double percentile = 98.0;
  double lambda_l1 = 1e-3;
  std::size_t n_train = 8192;
  std::size_t n_eval = 1024;
  TrainConfig train;
  AttributionConfig attribution;
  std::size_t jobs = 1;
};

/// For each (width, seed): trains a RELU_L1 SAE, selects features by AtP
/// against a threshold calibrated on that run, and scores recovery of the
/// causal directions at every cosine threshold. Cells come out ordered by
/// width, then seed, then threshold.
std::vector<RecoveryCell> synthetic_recovery(const GroundTruthSpec& spec, const RecoveryOptions& options);

struct SetStats {
  double mean_decoder_norm = 0.0;
  double mean_abs_cosine = 0.0;  ///< mean over members of the mean |cos| to every other decoder row
};

struct PrivilegeReport {
  SetStats causal;
  SetStats control;
  double norm_gap = 0.0;    ///< causal - control
  double cosine_gap = 0.0;  ///< causal - control
  double norm_gap_se = 0.0;
  double cosine_gap_se = 0.0;
  std::vector<std::size_t> causal_set;
  std::vector<std::size_t> control_set;  ///< control_set[i] is matched to causal_set[i]
  double max_relative_magnitude_gap = 0.0;
  std::string matching;
};

/// Magnitude of a feature: mean |f_i| over the rows of \p activations.
Vector feature_magnitudes(const SaeParams& sae, const Matrix& activations);

/// Compares decoder geometry of \p causal_set against non-causal features
/// matched greedily by nearest mean |activation|, without replacement.
/// Standard errors come from resampling matched pairs. Throws MatchingError
/// when the causal set has fewer than 2 members or more than m/2.
PrivilegeReport geometric_privilege(const SaeParams& sae, const Vector& magnitudes,
                                    const std::vector<std::size_t>& causal_set, std::uint64_t seed,
                                    std::size_t resamples = 1000);

struct SparsityEntry {
  std::string arch;
  Vector firing_freq;
  Vector scores;
  double epsilon_abs = 0.0;
};

struct SparsityReport {
  std::vector<std::pair<std::string, double>> per_arch;  ///< in order of first appearance
  double global = 0.0;
};

/// Spearman correlation of firing frequency against the 0/1 causal
/// membership indicator, per architecture (entries pooled) and over all
/// entries. Throws InputError for fewer than two entries and StatisticsError
/// when a pool is all causal, all non-causal, or has constant firing.
SparsityReport sparsity_dependence(const std::vector<SparsityEntry>& entries);

}  // namespace kappa

#endif  // KAPPA_CONTROLS_HPP
