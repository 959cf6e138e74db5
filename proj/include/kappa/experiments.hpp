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

#ifndef KAPPA_EXPERIMENTS_HPP
#define KAPPA_EXPERIMENTS_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kappa/config.hpp"

namespace kappa {

struct RunContext {
  std::size_t jobs = 1;
  std::filesystem::path checkpoint_dir;  ///< empty: SAE checkpoints are not written
};

struct ExperimentOutput {
  nlohmann::json payload;  ///< always has a "tables" object
  std::optional<nlohmann::json> verdict;
};

/// Error raised inside an experiment after some results exist.
class ExperimentError : public Error {
 public:
  ExperimentError(const std::string& what, nlohmann::json partial) : Error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const nlohmann::json& partial() const noexcept { return partial_; }

 private:
  nlohmann::json partial_;
};

/// A payload table: named columns, row-major values and the axes a plot uses.
nlohmann::json make_table(const std::vector<std::string>& columns, nlohmann::json rows, const std::string& x,
                          const std::vector<std::string>& y, bool log_x);

/// Runs a registered experiment. Throws ConfigError for an unknown name.
ExperimentOutput run_experiment(const RunConfig& config, const RunContext& context = {});

/// Fixture document shipped in the fixture directory (or \p file when given).
nlohmann::json load_fixtures(const std::string& file = "");
std::filesystem::path fixture_dir();

}  // namespace kappa

#endif  // KAPPA_EXPERIMENTS_HPP
