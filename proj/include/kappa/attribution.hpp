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

#ifndef KAPPA_ATTRIBUTION_HPP
#define KAPPA_ATTRIBUTION_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kappa/linalg.hpp"
#include "kappa/sae.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {

/// KlAtPatched: L = KL(p_clean || p(f')) with the gradient taken at the
/// feature-ablated code. CeCleanTarget: L = cross-entropy of p(f') against the
/// clean argmax token, gradient at the clean code.
enum class LossKind { KlAtPatched, CeCleanTarget };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct AttributionConfig {
  LossKind loss_kind = LossKind::KlAtPatched;
  double eps_clamp = 1e-12;
  std::size_t probe = 0;  ///< model probe point the SAE is attached to

  bool operator==(const AttributionConfig&) const = default;
};

/// Loss value and its gradient with respect to the patched logits.
struct LossEvaluation {
  double value = 0.0;
  Vector grad_logits;
};

/// A loss comparing clean and patched logits.
using LossFunction = std::function<LossEvaluation(const Vector& clean_logits, const Vector& patched_logits)>;

/// Where the loss gradient is evaluated.
enum class GradientPoint { Patched, Clean };

/// KL(p_clean || p_patched) in nats; probabilities floored at eps_clamp inside logs.
LossFunction kl_loss(double eps_clamp);

/// -log p_patched[argmax clean], with the probability floored at eps_clamp.
LossFunction clean_target_cross_entropy(double eps_clamp);

struct AtpScores {
  Vector scores;  ///< per-feature mean |dL/df_i * f_i|
  std::size_t n_samples = 0;
  LossKind loss_kind = LossKind::KlAtPatched;
  double eps_clamp = 1e-12;
};

struct ExactPatchResult {
  std::vector<std::size_t> features;
  Vector effects;  ///< aligned with features; mean |L(patched) - L(clean)|
  std::size_t n_samples = 0;
};

struct ValidationReport {
  double spearman_global = 0.0;
  double spearman_top_q = 0.0;
  double threshold_agreement = 0.0;
  double q = 5.0;
  std::size_t n_features = 0;
  std::size_t n_top_q = 0;
};

/// Attribution-patching scores for every SAE feature over the rows of
/// \p activations (probe activations of dimension sae.dim()). The clean
/// reference is the SAE reconstruction, so clean and patched differ only in
/// the ablated feature. Throws NumericalError with the sample index if the
/// loss is non-finite.
AtpScores atp_scores(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                     const AttributionConfig& config);

/// Same, with an explicit loss and gradient point.
AtpScores atp_scores(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                     const LossFunction& loss, GradientPoint point, std::size_t probe = 0);

/// Zero-ablates each listed feature and measures the mean loss change. The
/// default loss is KL with \p config.eps_clamp.
ExactPatchResult exact_patch(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                             const std::vector<std::size_t>& feature_subset, const AttributionConfig& config);

ExactPatchResult exact_patch(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                             const std::vector<std::size_t>& feature_subset, const LossFunction& loss,
                             std::size_t probe = 0);

/// Rank agreement of AtP with exact patching over exact.features. The top-q
/// subset is chosen by AtP; threshold agreement is the Jaccard overlap of the
/// top-2% sets under each score. Throws StatisticsError if fewer than three
/// features take part.
ValidationReport validate_atp(const AtpScores& atp, const ExactPatchResult& exact, double q);

}  // namespace kappa

#endif  // KAPPA_ATTRIBUTION_HPP
