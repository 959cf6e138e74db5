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

// kappa: command-line front end for the experiment harness.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kappa/config.hpp"
#include "kappa/errors.hpp"
#include "kappa/experiments.hpp"
#include "kappa/harness.hpp"
#include "kappa/serialization.hpp"

namespace {

void print_issues(const std::vector<kappa::ConfigIssue>& issues) {
  for (const auto& i : issues) std::cerr << "  " << i.path << ": " << i.message << "\n";
}

bool unknown_experiment(const std::vector<kappa::ConfigIssue>& issues) {
  for (const auto& i : issues) {
    if (i.path == "experiment") return true;
  }
  return false;
}

int report_config_error(const kappa::ConfigError& e) {
  if (const auto* s = dynamic_cast<const kappa::ConfigSyntaxError*>(&e)) {
    std::cerr << "syntax error at line " << s->line() << ", column " << s->column() << ": " << e.what() << "\n";
    return kappa::kExitValidation;
  }
  if (const auto* v = dynamic_cast<const kappa::ConfigValidationError*>(&e)) {
    std::cerr << "invalid configuration:\n";
    print_issues(v->issues());
    return unknown_experiment(v->issues()) ? kappa::kExitUsage : kappa::kExitValidation;
  }
  std::cerr << "error: " << e.what() << "\n";
  return kappa::kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kappa: causal-dimensionality experiments on planted-rank toy models"};
  app.set_version_flag("--version", std::string(KAPPA_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t jobs = 1;
  bool checkpoints = false;
  std::string experiment;
  auto* run = app.add_subcommand("run", "run one experiment and write a results document");
  run->add_option("experiment", experiment, "experiment name (overrides the config file)");
  run->add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "base seed (overrides the config file)");
  run->add_option("--out", out, "output directory (overrides output_dir)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--checkpoints", checkpoints, "save trained SAEs next to the document");

  std::string document_path;
  std::string format = "CSV";
  auto* exp = app.add_subcommand("export", "write the tables of a results document as CSV or PLOTDATA");
  exp->add_option("document", document_path, "results document")->required()->check(CLI::ExistingFile);
  exp->add_option("--format", format, "CSV or PLOTDATA");
  exp->add_option("--out", out, "directory for the exported files (default: next to the document)");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "check a configuration file against the schema");
  val->add_option("path", validate_path, "configuration file");
  val->add_option("--config", config_path, "configuration file");

  bool verify = false;
  auto* fix = app.add_subcommand("fixtures", "list the shipped reference values, optionally refitting them");
  fix->add_flag("--verify", verify, "refit the reference data and print the comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kappa::kExitUsage;
  }

  try {
    if (*run) {
      kappa::RunConfig config;
      if (!config_path.empty()) {
        config = kappa::load_config(config_path);
      }
      if (!experiment.empty()) config.experiment = experiment;
      if (seed) config.seed = *seed;
      kappa::RunOptions options;
      options.out = out;
      options.jobs = jobs;
      options.checkpoints = checkpoints;
      options.summary = &std::cout;
      const auto outcome = kappa::run(config, options);
      std::cout << "\nwrote " << outcome.path.string() << "\n";
      return outcome.document.status == "ok" ? kappa::kExitOk : kappa::kExitFailure;
    }
    if (*exp) {
      const auto fmt = kappa::parse_export_format(format);
      const auto doc = kappa::load_results(document_path);
      const std::filesystem::path dir = out ? std::filesystem::path(*out) : std::filesystem::path(document_path).parent_path();
      for (const auto& p : kappa::export_document(doc, fmt, dir.empty() ? "." : dir)) std::cout << p.string() << "\n";
      return kappa::kExitOk;
    }
    if (*val) {
      const std::string path = validate_path.empty() ? config_path : validate_path;
      if (path.empty()) {
        std::cerr << "validate: a configuration file is required\n";
        return kappa::kExitUsage;
      }
      const auto issues = kappa::validate_config(path);
      if (issues.empty()) {
        std::cout << "ok\n";
        return kappa::kExitOk;
      }
      std::cerr << issues.size() << " issue(s):\n";
      print_issues(issues);
      return kappa::kExitValidation;
    }
    if (*fix) {
      const auto fx = kappa::load_fixtures();
      std::cout << (kappa::fixture_dir() / "paper_values.json").string() << "\n";
      for (const auto& [name, section] : fx.items()) {
        if (section.is_object()) std::cout << "  " << name << ": " << section.value("description", "") << "\n";
      }
      if (!verify) return kappa::kExitOk;
      kappa::RunConfig config;
      config.experiment = "paper_fixtures";
      const auto result = kappa::run_experiment(config);
      std::cout << "\n" << result.verdict->dump(2) << "\n";
      return kappa::kExitOk;
    }
  } catch (const kappa::ConfigError& e) {
    if (std::string(e.what()).rfind("unknown export format", 0) == 0) {
      std::cerr << e.what() << "\n";
      return kappa::kExitUsage;
    }
    return report_config_error(e);
  } catch (const kappa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kappa::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kappa::kExitFailure;
  }
  return kappa::kExitUsage;
}
