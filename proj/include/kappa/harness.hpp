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

#ifndef KAPPA_HARNESS_HPP
#define KAPPA_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kappa/config.hpp"

namespace kappa {

inline constexpr const char* kResultsSchema = "kappa.results/1";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitFailure = 3;

struct ResultsDocument {
  std::string schema_version = kResultsSchema;
  std::string experiment;
  nlohmann::json config;   ///< full config snapshot, defaults included
  nlohmann::json payload;  ///< experiment output; "tables" holds the exportable tables
  double wall_time = 0.0;  ///< seconds
  std::uint64_t seed = 0;
  std::string library_version;
  std::optional<nlohmann::json> verdict;
  std::string status = "ok";  ///< "ok" or "error"
  std::optional<std::string> error;
  bool operator==(const ResultsDocument&) const = default;
};

std::string serialize(const ResultsDocument& doc);
/// Throws InputError on a malformed or foreign document.
ResultsDocument parse_results(const std::string& text);
ResultsDocument load_results(const std::filesystem::path& path);

/// Payload with wall_time and other run-specific fields removed; two runs of
/// the same config and seed produce identical strings.
std::string numeric_fingerprint(const ResultsDocument& doc);

struct RunOptions {
  std::optional<std::string> out;  ///< overrides config.output_dir
  std::size_t jobs = 1;
  bool checkpoints = false;  ///< write trained SAEs next to the document
  std::ostream* summary = nullptr;
};

struct RunOutcome {
  ResultsDocument document;
  std::filesystem::path path;
};

/// Output directory: --out, else config.output_dir; a relative path is taken
/// against $KAPPA_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const RunConfig& config, const std::optional<std::string>& out);

/// Runs the experiment and writes <dir>/<experiment>_seed<seed>.json atomically.
/// Experiment failures produce a document with status "error" rather than an exception.
RunOutcome run(const RunConfig& config, const RunOptions& options = {});

std::string summary_table(const ResultsDocument& doc);

enum class ExportFormat { Csv, PlotData };
/// Throws ConfigError naming the accepted formats.
ExportFormat parse_export_format(const std::string& name);

/// One file per payload table: <table>.csv or <table>.plotdata.csv. Returns the paths written.
std::vector<std::filesystem::path> export_document(const ResultsDocument& doc, ExportFormat format,
                                                   const std::filesystem::path& dir);

}  // namespace kappa

#endif  // KAPPA_HARNESS_HPP
