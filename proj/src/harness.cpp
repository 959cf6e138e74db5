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

#include "kappa/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "kappa/experiments.hpp"
#include "kappa/serialization.hpp"

namespace kappa {

namespace {

std::string cell_text(const Json& v) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) quoted += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return quoted + "\"";
  }
  return v.dump();
}

std::string join_row(const Json& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "," : "") + cell_text(row[i]);
  return line;
}

std::size_t column_index(const Json& table, const std::string& name) {
  const auto& cols = table.at("columns");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == name) return i;
  }
  throw InputError("table has no column '" + name + "'");
}

}  // namespace

std::string serialize(const ResultsDocument& doc) {
  Json j = {{"schema_version", doc.schema_version},
            {"experiment", doc.experiment},
            {"config", doc.config},
            {"payload", doc.payload},
            {"wall_time", doc.wall_time},
            {"seed", doc.seed},
            {"library_version", doc.library_version},
            {"status", doc.status}};
  if (doc.verdict) j["verdict"] = *doc.verdict;
  if (doc.error) j["error"] = *doc.error;
  return j.dump(2) + "\n";
}

ResultsDocument parse_results(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("results document: ") + e.what());
  }
  ResultsDocument doc;
  try {
    doc.schema_version = j.at("schema_version").get<std::string>();
    if (doc.schema_version != kResultsSchema) {
      throw InputError("results document: unsupported schema_version '" + doc.schema_version + "'");
    }
    doc.experiment = j.at("experiment").get<std::string>();
    doc.config = j.at("config");
    doc.payload = j.at("payload");
    doc.wall_time = j.at("wall_time").get<double>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.library_version = j.at("library_version").get<std::string>();
    doc.status = j.at("status").get<std::string>();
    if (j.contains("verdict")) doc.verdict = j["verdict"];
    if (j.contains("error")) doc.error = j["error"].get<std::string>();
  } catch (const Json::exception& e) {
    throw InputError(std::string("results document: ") + e.what());
  }
  return doc;
}

ResultsDocument load_results(const std::filesystem::path& path) { return parse_results(read_file(path)); }

std::string numeric_fingerprint(const ResultsDocument& doc) {
  Json j = {{"payload", doc.payload}, {"seed", doc.seed}, {"status", doc.status}};
  if (doc.verdict) j["verdict"] = *doc.verdict;
  return j.dump();
}

std::filesystem::path resolve_output_dir(const RunConfig& config, const std::optional<std::string>& out) {
  std::filesystem::path dir = out ? *out : config.output_dir;
  if (dir.is_relative()) {
    if (const char* root = std::getenv("KAPPA_OUTPUT_ROOT"); root && *root) dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

RunOutcome run(const RunConfig& config, const RunOptions& options) {
  if (auto issues = config_issues(config); !issues.empty()) throw ConfigValidationError(std::move(issues));
  const std::filesystem::path dir = resolve_output_dir(config, options.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("output_dir: cannot create '" + dir.string() + "'");
  }
  const std::string stem = config.experiment + "_seed" + std::to_string(config.seed);

  RunContext ctx;
  ctx.jobs = options.jobs;
  if (options.checkpoints) {
    ctx.checkpoint_dir = dir / (stem + "_checkpoints");
    std::filesystem::create_directories(ctx.checkpoint_dir);
  }

  ResultsDocument doc;
  doc.experiment = config.experiment;
  doc.config = config_to_json(config);
  doc.seed = config.seed;
  doc.library_version = KAPPA_VERSION;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentOutput out = run_experiment(config, ctx);
    doc.payload = std::move(out.payload);
    doc.verdict = std::move(out.verdict);
  } catch (const ExperimentError& e) {
    doc.status = "error";
    doc.error = e.what();
    doc.payload = e.partial();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    doc.status = "error";
    doc.error = e.what();
    doc.payload = Json::object();
  }
  if (!doc.payload.contains("tables")) doc.payload["tables"] = Json::object();
  doc.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunOutcome outcome{std::move(doc), dir / (stem + ".json")};
  write_atomic(outcome.path, serialize(outcome.document));
  if (options.summary) *options.summary << summary_table(outcome.document);
  return outcome;
}

std::string summary_table(const ResultsDocument& doc) {
  constexpr std::size_t kMaxRows = 12;
  std::ostringstream os;
  os << doc.experiment << "  seed=" << doc.seed << "  status=" << doc.status << "  wall_time=" << std::fixed
     << std::setprecision(2) << doc.wall_time << "s\n";
  os.unsetf(std::ios::floatfield);
  if (doc.error) os << "error: " << *doc.error << "\n";
  for (const auto& [name, table] : doc.payload.at("tables").items()) {
    const auto& cols = table.at("columns");
    const auto& rows = table.at("rows");
    os << "\n[" << name << "] " << rows.size() << " rows\n";
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> widths;
    std::vector<std::string> header;
    for (const auto& c : cols) header.push_back(c.get<std::string>());
    cells.push_back(header);
    for (std::size_t r = 0; r < std::min(rows.size(), kMaxRows); ++r) {
      std::vector<std::string> line;
      for (const auto& v : rows[r]) {
        if (v.is_number_float()) {
          std::ostringstream num;
          num << std::setprecision(5) << v.get<double>();
          line.push_back(num.str());
        } else {
          line.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
      }
      cells.push_back(std::move(line));
    }
    for (const auto& line : cells) {
      widths.resize(std::max(widths.size(), line.size()), 0);
      for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
    }
    for (const auto& line : cells) {
      for (std::size_t i = 0; i < line.size(); ++i) os << std::setw(static_cast<int>(widths[i]) + 2) << line[i];
      os << "\n";
    }
    if (rows.size() > kMaxRows) os << "  ... " << rows.size() - kMaxRows << " more\n";
  }
  if (doc.verdict) {
    os << "\nverdict\n";
    for (const auto& [k, v] : doc.verdict->items()) os << "  " << k << ": " << v.dump() << "\n";
  }
  return os.str();
}

ExportFormat parse_export_format(const std::string& name) {
  if (name == "CSV" || name == "csv") return ExportFormat::Csv;
  if (name == "PLOTDATA" || name == "plotdata") return ExportFormat::PlotData;
  throw ConfigError("unknown export format '" + name + "' (expected CSV or PLOTDATA)");
}

std::vector<std::filesystem::path> export_document(const ResultsDocument& doc, ExportFormat format,
                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  if (!doc.payload.contains("tables")) return written;
  for (const auto& [name, table] : doc.payload.at("tables").items()) {
    const auto& rows = table.at("rows");
    std::string text;
    std::filesystem::path path;
    if (format == ExportFormat::Csv) {
      path = dir / (name + ".csv");
      text = join_row(table.at("columns")) + "\n";
      for (const auto& row : rows) text += join_row(row) + "\n";
    } else {
      path = dir / (name + ".plotdata.csv");
      const auto& plot = table.at("plot");
      const std::size_t xi = column_index(table, plot.at("x").get<std::string>());
      text = "# x=" + plot.at("x").get<std::string>() + (plot.value("log_x", false) ? " scale=log" : " scale=linear") + "\n";
      text += "x,y,series\n";
      for (const auto& y : plot.at("y")) {
        const std::size_t yi = column_index(table, y.get<std::string>());
        for (const auto& row : rows) {
          std::string series = y.get<std::string>();
          if (table.at("columns")[0] == "replicate") series += "_r" + row[0].dump();
          text += cell_text(row[xi]) + "," + cell_text(row[yi]) + "," + cell_text(series) + "\n";
        }
      }
    }
    write_atomic(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace kappa
