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

#ifndef KAPPA_CONFIG_HPP
#define KAPPA_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kappa/curve_fit.hpp"
#include "kappa/errors.hpp"
#include "kappa/sweep.hpp"
#include "kappa/synthetic_model.hpp"

namespace kappa {

inline constexpr const char* kConfigSchema = "kappa.config/1";

struct FitConfig {
  ExcludeRule exclude = ExcludeRule::PostMinimum;
  std::size_t bootstrap_replicates = 200;  ///< 0 disables the bootstrap
  double level = 0.95;
  double kappa_max_factor = 100.0;  ///< kappa upper bound in units of d
  bool operator==(const FitConfig&) const = default;
};

struct AtpValidationOptions {
  std::size_t width = 256;
  double q = 10.0;
  std::size_t n_samples = 512;
  bool operator==(const AtpValidationOptions&) const = default;
};

struct FourCellOptionsConfig {
  std::size_t width = 1024;
  bool operator==(const FourCellOptionsConfig&) const = default;
};

struct RecoveryConfig {
  std::vector<std::size_t> widths = {16, 32, 64, 128, 256, 512, 1024, 2048};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<double> cosine_thresholds = {0.3, 0.5, 0.7};
  double lambda_l1 = 1e-3;
  bool operator==(const RecoveryConfig&) const = default;
};

struct PrivilegeConfig {
  std::vector<std::size_t> widths = {256, 1024};
  std::size_t resamples = 1000;
  bool operator==(const PrivilegeConfig&) const = default;
};

struct SparsityConfig {
  std::size_t width = 512;
  std::vector<std::string> archs = {"RELU_L1", "TOPK", "JUMPRELU"};
  bool operator==(const SparsityConfig&) const = default;
};

struct SensitivityConfig {
  std::vector<double> multipliers = {0.1, 0.3, 1.0, 3.0, 10.0};
  double ratio_limit = 10.0;
  std::size_t min_pass = 4;
  bool operator==(const SensitivityConfig&) const = default;
};

struct PlantedRankConfig {
  std::size_t n_samples = 2000;
  double epsilon_prime_rel = 1e-6;  ///< spectral threshold relative to lambda_max
  bool operator==(const PlantedRankConfig&) const = default;
};

struct FixtureConfig {
  std::string file;  ///< empty: paper_values.json in the fixture directory
  bool operator==(const FixtureConfig&) const = default;
};

struct ExperimentOptions {
  AtpValidationOptions atp_validation;
  FourCellOptionsConfig four_cell;
  RecoveryConfig synthetic_recovery;
  PrivilegeConfig geometric_privilege;
  SparsityConfig sparsity_dependence;
  SensitivityConfig threshold_sensitivity;
  PlantedRankConfig planted_rank;
  FixtureConfig paper_fixtures;
  bool operator==(const ExperimentOptions&) const = default;
};

/// One file fully specifies a run; every field has the default shown in
/// docs/config.md.
struct RunConfig {
  std::string experiment = "width_sweep";
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  std::vector<std::string> tags;
  GroundTruthSpec model;
  SweepConfig sweep;  ///< sweep.attribution mirrors the top-level "attribution" block
  FitConfig fit;
  ExperimentOptions options;
  bool operator==(const RunConfig&) const = default;
};

/// Registered experiment identifiers, in documentation order.
const std::vector<std::string>& registered_experiments();

struct ConfigIssue {
  std::string path;  ///< dotted field path, e.g. "sweep.m_ref"
  std::string message;
};

/// Syntax error in a config file, with 1-based line and column.
class ConfigSyntaxError : public ConfigError {
 public:
  ConfigSyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : ConfigError(what), line_(line), column_(column) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Thrown by load_config when the document parses but violates the schema.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<ConfigIssue> issues);
  [[nodiscard]] const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses JSON text; throws ConfigSyntaxError with line/column on bad syntax.
nlohmann::json parse_config_text(const std::string& text);

/// Reads every known field (missing ones keep their defaults) and reports
/// unknown keys, type mismatches and violated invariants with field paths.
RunConfig config_from_json(const nlohmann::json& j, std::vector<ConfigIssue>& issues);

/// Invariant violations of an in-memory config.
std::vector<ConfigIssue> config_issues(const RunConfig& config);

/// Full document for \p config, including every default.
nlohmann::json config_to_json(const RunConfig& config);

/// Parse + validate. Throws ConfigSyntaxError or ConfigValidationError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig load_config_text(const std::string& text);

/// Returns the issues without throwing on validation problems (syntax errors still throw).
std::vector<ConfigIssue> validate_config(const std::filesystem::path& path);

/// Seed used for sweep replicate \p replicate of a run with base seed \p run_seed.
std::uint64_t replicate_seed(std::uint64_t run_seed, std::uint64_t replicate);

}  // namespace kappa

#endif  // KAPPA_CONFIG_HPP
