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

#ifndef KAPPA_RANDOM_HPP
#define KAPPA_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "kappa/linalg.hpp"

namespace kappa {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finalizer). Used to give
/// every sample, width and replicate its own generator so that serial and
/// parallel execution draw identical numbers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

Rng make_rng(std::uint64_t base, std::uint64_t stream = 0);

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double stddev = 1.0);

/// Rows are independent standard-Gaussian directions scaled to unit norm.
Matrix random_unit_rows(Index rows, Index cols, Rng& rng);

/// Orthonormalizes the rows of \p m in order (modified Gram-Schmidt, two passes).
/// Throws InputError if the rows are linearly dependent.
Matrix orthonormalize_rows(const Matrix& m);

/// A random frame of \p rows unit vectors in R^cols. For rows <= cols the rows are
/// orthonormal (orthonormalized Gaussian); above that an orthonormal frame cannot
/// exist and the rows are independent unit-norm Gaussian directions.
Matrix random_orthonormal_frame(Index rows, Index cols, Rng& rng);

/// Orthonormal basis (as rows) of the orthogonal complement of the row span of
/// \p basis, which must have orthonormal rows.
Matrix orthogonal_complement(const Matrix& basis);

/// Uniform random permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace kappa

#endif  // KAPPA_RANDOM_HPP
