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

#ifndef KAPPA_SPECTRAL_HPP
#define KAPPA_SPECTRAL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kappa/linalg.hpp"

namespace kappa {

/// Positive eigenvalues of a PSD Gram matrix, descending. Eigenvalues below
/// clamp_tol * lambda_max are dropped; trace is the sum of what remains.
struct Spectrum {
  std::vector<double> eigenvalues;
  double trace = 0.0;
  std::size_t d = 0;
  double clamp_tol = 1e-10;
};

struct KappaEstimate {
  double eff_rank = 0.0;
  std::size_t spectral_count = 0;
  double participation_ratio = 0.0;
  double epsilon_prime = 0.0;
};

struct BoundReport {
  bool ok = true;
  std::string report;
};

/// Mean of J^T J over the given Jacobians (all vocab x d with the same shape).
Matrix accumulate_sigma(std::span<const Matrix> jacobians);

/// Symmetric eigendecomposition of \p sigma. Throws InputError if sigma is not
/// symmetric to 1e-9 relative.
Spectrum eigenspectrum(const Matrix& sigma, double clamp_tol = 1e-10);

/// Builds a Spectrum directly from nonnegative eigenvalues (any order).
Spectrum spectrum_from_eigenvalues(std::vector<double> eigenvalues, std::size_t d, double clamp_tol = 1e-10);

/// exp of the Shannon entropy of the normalized eigenvalues.
/// Throws UndefinedError on an all-zero spectrum.
double effective_rank(const Spectrum& spectrum);

/// |{i : lambda_i >= epsilon_prime}| over the retained (positive) eigenvalues.
std::size_t spectral_count(const Spectrum& spectrum, double epsilon_prime);

/// (sum s)^2 / sum s^2. Throws UndefinedError if no entry is positive and
/// InputError on negative or non-finite entries.
double participation_ratio(std::span<const double> scores);

/// exp(Shannon entropy) of scores normalized to a distribution.
double entropy_effective_count(std::span<const double> scores);

KappaEstimate estimate_kappa(const Spectrum& spectrum, std::span<const double> scores, double epsilon_prime);

/// Checks the ambient bound eff_rank <= min(d, vocab_size) and spectral_count <= d.
BoundReport check_dimension_bound(const KappaEstimate& estimate, std::size_t d, std::size_t vocab_size);

}  // namespace kappa

#endif  // KAPPA_SPECTRAL_HPP
