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

#ifndef KAPPA_ERRORS_HPP
#define KAPPA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kappa {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a documented bound.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument to an operation is malformed (wrong shape, non-finite, empty).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A loss or statistic became non-finite.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t sample_index)
      : Error(what + " (sample " + std::to_string(sample_index) + ")"), sample_index_(sample_index) {}

  [[nodiscard]] std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

/// SAE training diverged.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

  [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Nonlinear least squares did not converge; carries the residual trace.
class FitError : public Error {
 public:
  FitError(const std::string& what, std::vector<double> residual_trace)
      : Error(what), residual_trace_(std::move(residual_trace)) {}

  [[nodiscard]] const std::vector<double>& residual_trace() const noexcept { return residual_trace_; }

 private:
  std::vector<double> residual_trace_;
};

/// A statistic is undefined on the given input (too few points, zero variance).
class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// A quantity has no value on the given operator (zero spectrum, zero scores).
class UndefinedError : public Error {
 public:
  using Error::Error;
};

/// Magnitude-matched control selection could not be built.
class MatchingError : public Error {
 public:
  using Error::Error;
};

/// One width of a sweep failed; names the width.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, std::size_t width)
      : Error("width " + std::to_string(width) + ": " + what), width_(width) {}

  [[nodiscard]] std::size_t width() const noexcept { return width_; }

 private:
  std::size_t width_;
};

}  // namespace kappa

#endif  // KAPPA_ERRORS_HPP
