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

#include "kappa/random.hpp"

#include <algorithm>
#include <numeric>

#include "kappa/errors.hpp"

namespace kappa {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t base, std::uint64_t stream) { return Rng{derive_seed(base, stream)}; }

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix out(rows, cols);
  // Row-major fill order so results do not depend on Eigen's storage order.
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      out(r, c) = normal(rng);
    }
  }
  return out;
}

Matrix random_unit_rows(Index rows, Index cols, Rng& rng) {
  Matrix out = gaussian_matrix(rows, cols, rng);
  for (Index r = 0; r < rows; ++r) {
    double norm = out.row(r).norm();
    while (norm == 0.0) {
      out.row(r) = gaussian_matrix(1, cols, rng);
      norm = out.row(r).norm();
    }
    out.row(r) /= norm;
  }
  return out;
}

Matrix orthonormalize_rows(const Matrix& m) {
  Matrix q = m;
  for (Index r = 0; r < q.rows(); ++r) {
    const double original = q.row(r).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index p = 0; p < r; ++p) {
        q.row(r) -= q.row(r).dot(q.row(p)) * q.row(p);
      }
    }
    const double norm = q.row(r).norm();
    if (original == 0.0 || norm <= 1e-10 * original) {
      throw InputError("orthonormalize_rows: row " + std::to_string(r) + " is linearly dependent");
    }
    q.row(r) /= norm;
  }
  return q;
}

Matrix random_orthonormal_frame(Index rows, Index cols, Rng& rng) {
  if (rows <= cols) {
    return orthonormalize_rows(gaussian_matrix(rows, cols, rng));
  }
  return random_unit_rows(rows, cols, rng);
}

Matrix orthogonal_complement(const Matrix& basis) {
  const Index d = basis.cols();
  const Index k = basis.rows();
  if (k >= d) {
    return Matrix(0, d);
  }
  // Full QR of basis^T: the trailing d-k columns of Q span the complement.
  Eigen::HouseholderQR<Matrix> qr(basis.transpose());
  const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return q.rightCols(d - k).transpose();
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Explicit Fisher-Yates: std::shuffle's draw pattern is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return perm;
}

}  // namespace kappa
