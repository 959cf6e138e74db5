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

#ifndef KAPPA_SYNTHETIC_MODEL_HPP
#define KAPPA_SYNTHETIC_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kappa/linalg.hpp"

namespace kappa {

/// Dimensions and noise of a planted-rank toy model.
struct GroundTruthSpec {
  std::size_t d = 64;                  ///< activation dimension
  std::size_t n_features = 500;        ///< dictionary size
  std::size_t n_causal = 50;           ///< planted causal rank
  std::size_t active_per_sample = 5;   ///< expected nonzero coefficients per sample
  double noise_sigma = 0.01;           ///< per-coordinate additive noise std
  std::size_t vocab_size = 128;        ///< logit dimension
  std::size_t depth = 2;               ///< readout layers; 1 is a linear head
  std::uint64_t seed = 0;

  std::size_t hidden_width = 0;        ///< width of tanh layers, 0 means d
  double logit_scale = 1.0;            ///< output layer gain
  bool allow_small_vocab = false;      ///< permit vocab_size < d
  bool inert_complement = false;       ///< draw non-causal directions inside the inert complement
  double causal_rate_scale = 1.0;      ///< firing-rate multiplier for causal features
  double causal_coef_scale = 1.0;      ///< coefficient multiplier for causal features

  bool operator==(const GroundTruthSpec&) const = default;
};

/// Every violated bound of \p spec, phrased with the field name. Empty when valid.
std::vector<std::string> spec_violations(const GroundTruthSpec& spec);

/// Throws ConfigError naming the first violated bound.
void validate(const GroundTruthSpec& spec);

struct FeatureDictionary {
  Matrix directions;                        ///< n_features x d, unit-norm rows
  std::vector<std::size_t> causal_index_set;  ///< sorted
};

struct HeadLayer {
  Matrix weight;  ///< out x in
  Vector bias;
  bool nonlinear = false;  ///< tanh after the affine map
};

/// Planted-rank model: logits = head(causal_projector * h).
///
/// Probe points index the places an SAE can be attached. Probe 0 is the input
/// activation h; probe p >= 1 is the output of the p-th tanh layer. A model of
/// depth D exposes D probe points.
struct GroundTruthModel {
  GroundTruthSpec spec;
  FeatureDictionary dictionary;
  Matrix causal_projector;  ///< n_causal x d, orthonormal rows
  std::vector<HeadLayer> head;
  std::string activation_kind = "tanh";

  [[nodiscard]] std::size_t probe_count() const { return head.size(); }
  [[nodiscard]] Index probe_dim(std::size_t probe) const;
};

struct ActivationSample {
  Vector h;
  std::vector<std::size_t> active_set;  ///< ascending feature indices
  std::vector<double> coefficients;     ///< aligned with active_set
};

struct ForwardResult {
  Vector logits;
  Vector probabilities;
};

GroundTruthModel generate_model(const GroundTruthSpec& spec);

/// Sample i draws from its own generator derived from (seed, i), so any
/// partition of the batch reproduces the same samples.
std::vector<ActivationSample> sample_batch(const GroundTruthModel& model, std::size_t n, std::uint64_t seed);

/// Stacks sample activations into an n x d matrix.
Matrix activation_matrix(const std::vector<ActivationSample>& samples);

ForwardResult forward(const GroundTruthModel& model, const Vector& h);
ForwardResult forward_from(const GroundTruthModel& model, std::size_t probe, const Vector& x);

Vector logits_from(const GroundTruthModel& model, std::size_t probe, const Vector& x);

/// Exact d(logits)/dh, vocab_size x d.
Matrix jacobian(const GroundTruthModel& model, const Vector& h);
Matrix jacobian_from(const GroundTruthModel& model, std::size_t probe, const Vector& x);

/// Vector-Jacobian product: J(x)^T * grad_logits, without forming J.
Vector vjp_from(const GroundTruthModel& model, std::size_t probe, const Vector& x, const Vector& grad_logits);

/// Maps an input activation h to the activation seen at \p probe.
Vector probe_activation(const GroundTruthModel& model, std::size_t probe, const Vector& h);

/// Row-wise probe_activation over an n x d matrix.
Matrix probe_activations(const GroundTruthModel& model, std::size_t probe, const Matrix& inputs);

/// Sample mean of J^T J at probe 0.
Matrix sigma_true(const GroundTruthModel& model, const std::vector<ActivationSample>& samples);

/// Sample mean of J^T J at \p probe over the rows of \p inputs (probe activations).
Matrix sigma_true_from(const GroundTruthModel& model, std::size_t probe, const Matrix& inputs);

/// Orthonormal rows spanning the directions the logits ignore.
Matrix inert_basis(const GroundTruthModel& model);

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

}  // namespace kappa

#endif  // KAPPA_SYNTHETIC_MODEL_HPP
