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

#ifndef KAPPA_SAE_HPP
#define KAPPA_SAE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kappa/linalg.hpp"

namespace kappa {

enum class SaeArch { ReluL1, TopK, JumpRelu };

std::string to_string(SaeArch arch);
/// Accepts "RELU_L1", "TOPK", "JUMPRELU". Throws ConfigError otherwise.
SaeArch parse_arch(const std::string& name);

/// Sparse autoencoder weights. Row i of w_dec is feature i's decoder direction.
struct SaeParams {
  Matrix w_enc;  ///< m x d
  Vector b_enc;  ///< m
  Matrix w_dec;  ///< m x d
  Vector b_dec;  ///< d
  SaeArch arch = SaeArch::ReluL1;
  std::size_t k = 0;       ///< active count for TopK
  Vector theta;            ///< per-feature JumpReLU thresholds
  double lambda_l1 = 0.0;  ///< L1 coefficient for ReluL1 (also used by JumpRelu training)

  [[nodiscard]] std::size_t width() const { return static_cast<std::size_t>(w_enc.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(w_enc.cols()); }
};

/// Unit-norm Gaussian decoder rows, encoder initialized to the decoder rows,
/// zero biases, JumpReLU thresholds at 0. Throws ConfigError for m < 1 or a
/// TopK k outside [1, m].
SaeParams init_sae(std::size_t d, std::size_t m, SaeArch arch, std::uint64_t seed, std::size_t k = 8,
                   double lambda_l1 = 1e-3);

/// Pre-activations w_enc (h - b_dec) + b_enc.
Vector pre_activations(const SaeParams& sae, const Vector& h);

Vector encode(const SaeParams& sae, const Vector& h);
Vector decode(const SaeParams& sae, const Vector& f);

/// Row-wise encode of an n x d matrix into n x m codes.
Matrix encode_batch(const SaeParams& sae, const Matrix& x);
Matrix decode_batch(const SaeParams& sae, const Matrix& f);

/// Indices of the k largest entries; ties go to the lower index.
std::vector<Index> top_k_indices(const Vector& values, std::size_t k);

struct TrainConfig {
  std::size_t epochs = 20;
  double lr = 0.02;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  double holdout_fraction = 0.1;
  bool resample_dead = false;
  bool init_decoder_bias_to_mean = true;
  double jumprelu_percentile = 50.0;  ///< percentile of positive pre-activations used as theta
  double alive_threshold = 1e-4;
  std::uint64_t seed = 0;  ///< minibatch order and held-out split

  bool operator==(const TrainConfig&) const = default;
};

struct SaeMetrics {
  double mean_l0 = 0.0;
  double mse = 0.0;            ///< mean squared error per coordinate
  double data_variance = 0.0;  ///< mean per-coordinate variance of the evaluated data
  Vector firing_freq;
  std::size_t n_dead = 0;
  std::size_t n_repr = 0;
  double alive_threshold = 1e-4;
};

struct TrainResult {
  SaeParams params;
  SaeMetrics metrics;                 ///< on the held-out split
  std::vector<double> learning_curve;  ///< training-set MSE after each epoch
};

/// Minibatch SGD with momentum on 0.5*|h_hat - h|^2 (+ lambda_l1 * sum f for
/// ReluL1/JumpRelu). Decoder rows are renormalized after every step. Throws
/// TrainingError carrying the epoch if the loss diverges.
TrainResult train_sae(SaeParams sae, const Matrix& data, const TrainConfig& config);

/// Reconstruction and firing statistics of \p sae on the rows of \p data.
/// A feature fires on a sample when its code entry is nonzero.
SaeMetrics evaluate_sae(const SaeParams& sae, const Matrix& data, double alive_threshold = 1e-4);

struct FiringStats {
  Vector firing_freq;
  std::size_t n_repr = 0;
  double mean_l0 = 0.0;
};

FiringStats firing_frequency(const SaeParams& sae, const Matrix& data, double alive_threshold = 1e-4);

/// |{i : freq_i > threshold}|
std::size_t count_represented(const Vector& firing_freq, double alive_threshold);

enum class ControlKind { RandomDecoder, ShuffledDecoder, RandomEncoder };

std::string to_string(ControlKind kind);

/// Randomized control variants: RandomDecoder replaces w_dec with a random
/// frame, ShuffledDecoder permutes decoder rows, RandomEncoder replaces w_enc
/// with a random frame and zeroes b_enc. Everything else is copied.
SaeParams make_control(const SaeParams& sae, ControlKind kind, std::uint64_t seed);

/// Decoder row i of the result is decoder row permutation[i] of \p sae.
SaeParams shuffle_decoder(const SaeParams& sae, const std::vector<std::size_t>& permutation);

}  // namespace kappa

#endif  // KAPPA_SAE_HPP
