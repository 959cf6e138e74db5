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

#include "kappa/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "kappa/errors.hpp"

namespace kappa {

Matrix accumulate_sigma(std::span<const Matrix> jacobians) {
  if (jacobians.empty()) throw InputError("accumulate_sigma: need at least one Jacobian");
  const Index rows = jacobians.front().rows();
  const Index cols = jacobians.front().cols();
  Matrix sigma = Matrix::Zero(cols, cols);
  for (std::size_t i = 0; i < jacobians.size(); ++i) {
    const Matrix& j = jacobians[i];
    if (j.rows() != rows || j.cols() != cols) {
      throw InputError("accumulate_sigma: Jacobian " + std::to_string(i) + " has shape " + std::to_string(j.rows()) +
                       "x" + std::to_string(j.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
    sigma.noalias() += j.transpose() * j;
  }
  sigma /= static_cast<double>(jacobians.size());
  return 0.5 * (sigma + sigma.transpose());
}

Spectrum spectrum_from_eigenvalues(std::vector<double> eigenvalues, std::size_t d, double clamp_tol) {
  Spectrum out;
  out.d = d;
  out.clamp_tol = clamp_tol;
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  const double top = eigenvalues.empty() ? 0.0 : eigenvalues.front();
  if (top > 0.0) {
    const double floor = clamp_tol * top;
    for (double v : eigenvalues) {
      if (v > floor && v > 0.0) out.eigenvalues.push_back(v);
    }
  }
  for (double v : out.eigenvalues) out.trace += v;
  return out;
}

Spectrum eigenspectrum(const Matrix& sigma, double clamp_tol) {
  if (sigma.rows() != sigma.cols()) throw InputError("eigenspectrum: matrix is not square");
  if (!sigma.allFinite()) throw InputError("eigenspectrum: matrix has non-finite entries");
  const double scale = sigma.cwiseAbs().maxCoeff();
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "eigenspectrum: matrix is not symmetric (max asymmetry " << asym << " vs scale " << scale << ")";
    throw InputError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (sigma + sigma.transpose()), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InputError("eigenspectrum: eigensolver failed");
  const Vector& ev = solver.eigenvalues();
  return spectrum_from_eigenvalues(std::vector<double>(ev.data(), ev.data() + ev.size()),
                                   static_cast<std::size_t>(sigma.rows()), clamp_tol);
}

double effective_rank(const Spectrum& spectrum) {
  if (spectrum.eigenvalues.empty() || !(spectrum.trace > 0.0)) {
    throw UndefinedError("effective rank is undefined on a zero spectrum");
  }
  double entropy = 0.0;
  for (double v : spectrum.eigenvalues) {
    const double p = v / spectrum.trace;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

std::size_t spectral_count(const Spectrum& spectrum, double epsilon_prime) {
  return static_cast<std::size_t>(std::count_if(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(),
                                                [epsilon_prime](double v) { return v >= epsilon_prime; }));
}

double participation_ratio(std::span<const double> scores) {
  double sum = 0.0, sum_sq = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) throw InputError("participation_ratio: scores must be finite and nonnegative");
    sum += s;
    sum_sq += s * s;
  }
  if (!(sum_sq > 0.0)) throw UndefinedError("participation ratio is undefined on all-zero scores");
  return sum * sum / sum_sq;
}

double entropy_effective_count(std::span<const double> scores) {
  std::vector<double> v(scores.begin(), scores.end());
  return effective_rank(spectrum_from_eigenvalues(std::move(v), scores.size(), 0.0));
}

KappaEstimate estimate_kappa(const Spectrum& spectrum, std::span<const double> scores, double epsilon_prime) {
  KappaEstimate out;
  out.eff_rank = effective_rank(spectrum);
  out.spectral_count = spectral_count(spectrum, epsilon_prime);
  out.participation_ratio = scores.empty() ? 0.0 : participation_ratio(scores);
  out.epsilon_prime = epsilon_prime;
  return out;
}

BoundReport check_dimension_bound(const KappaEstimate& estimate, std::size_t d, std::size_t vocab_size) {
  const double bound = static_cast<double>(std::min(d, vocab_size));
  BoundReport out;
  std::ostringstream msg;
  if (!(estimate.eff_rank <= bound + 1e-9)) {
    out.ok = false;
    msg << "dimension upper bound violated: eff_rank " << estimate.eff_rank << " > min(d, |V|) = " << bound << ". ";
  }
  if (estimate.spectral_count > d) {
    out.ok = false;
    msg << "dimension upper bound violated: spectral_count " << estimate.spectral_count << " > d = " << d << ". ";
  }
  if (out.ok) {
    msg << "eff_rank " << estimate.eff_rank << " <= min(d, |V|) = " << bound << "; spectral_count "
        << estimate.spectral_count << " <= d = " << d;
  }
  out.report = msg.str();
  return out;
}

}  // namespace kappa
