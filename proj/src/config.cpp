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

#include "kappa/config.hpp"

#include <algorithm>
#include <set>
#include <type_traits>

#include "kappa/random.hpp"
#include "kappa/serialization.hpp"

namespace kappa {

namespace {

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

std::string type_name(const Json& j) { return j.type_name(); }

class Reader {
 public:
  explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

  // Checks that \p j is an object whose keys are all in \p known.
  bool object(const Json& j, const std::string& path, const std::set<std::string>& known) {
    if (!j.is_object()) {
      issue(path.empty() ? "(root)" : path, "expected an object, got " + type_name(j));
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) issue(join_path(path, key), "unknown field");
    }
    return true;
  }

  template <typename T>
  void field(const Json& obj, const std::string& key, T& out, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    read(*it, out, join_path(path, key));
  }

  template <typename T>
  bool read(const Json& j, T& out, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) return mismatch(path, "boolean", j);
      out = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) return mismatch(path, "integer", j);
      if (std::is_unsigned_v<T> && j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0) {
        issue(path, "must be non-negative");
        return false;
      }
      out = j.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) return mismatch(path, "number", j);
      out = j.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) return mismatch(path, "string", j);
      out = j.get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
    return true;
  }

  template <typename T>
  void list(const Json& obj, const std::string& key, std::vector<T>& out, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string p = join_path(path, key);
    if (!it->is_array()) {
      mismatch(p, "array", *it);
      return;
    }
    std::vector<T> values;
    bool ok = true;
    for (std::size_t i = 0; i < it->size(); ++i) {
      T v{};
      ok = read((*it)[i], v, p + "[" + std::to_string(i) + "]") && ok;
      values.push_back(v);
    }
    if (ok) out = std::move(values);
  }

  template <typename E, typename Parse>
  void enumeration(const Json& obj, const std::string& key, E& out, const std::string& path, Parse parse) {
    std::string name;
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string p = join_path(path, key);
    if (!read(*it, name, p)) return;
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      issue(p, e.what());
    }
  }

  void issue(const std::string& path, const std::string& message) { issues_.push_back({path, message}); }

 private:
  bool mismatch(const std::string& path, const std::string& expected, const Json& got) {
    issue(path, "expected " + expected + ", got " + type_name(got));
    return false;
  }

  std::vector<ConfigIssue>& issues_;
};

void read_model(Reader& r, const Json& j, GroundTruthSpec& s) {
  const std::string p = "model";
  if (!r.object(j, p,
                {"d", "n_features", "n_causal", "active_per_sample", "noise_sigma", "vocab_size", "depth", "seed",
                 "hidden_width", "logit_scale", "allow_small_vocab", "inert_complement", "causal_rate_scale",
                 "causal_coef_scale"})) {
    return;
  }
  r.field(j, "d", s.d, p);
  r.field(j, "n_features", s.n_features, p);
  r.field(j, "n_causal", s.n_causal, p);
  r.field(j, "active_per_sample", s.active_per_sample, p);
  r.field(j, "noise_sigma", s.noise_sigma, p);
  r.field(j, "vocab_size", s.vocab_size, p);
  r.field(j, "depth", s.depth, p);
  r.field(j, "seed", s.seed, p);
  r.field(j, "hidden_width", s.hidden_width, p);
  r.field(j, "logit_scale", s.logit_scale, p);
  r.field(j, "allow_small_vocab", s.allow_small_vocab, p);
  r.field(j, "inert_complement", s.inert_complement, p);
  r.field(j, "causal_rate_scale", s.causal_rate_scale, p);
  r.field(j, "causal_coef_scale", s.causal_coef_scale, p);
}

void read_train(Reader& r, const Json& j, TrainConfig& t, const std::string& p) {
  if (!r.object(j, p,
                {"epochs", "lr", "momentum", "batch_size", "holdout_fraction", "resample_dead",
                 "init_decoder_bias_to_mean", "jumprelu_percentile"})) {
    return;
  }
  r.field(j, "epochs", t.epochs, p);
  r.field(j, "lr", t.lr, p);
  r.field(j, "momentum", t.momentum, p);
  r.field(j, "batch_size", t.batch_size, p);
  r.field(j, "holdout_fraction", t.holdout_fraction, p);
  r.field(j, "resample_dead", t.resample_dead, p);
  r.field(j, "init_decoder_bias_to_mean", t.init_decoder_bias_to_mean, p);
  r.field(j, "jumprelu_percentile", t.jumprelu_percentile, p);
}

void read_sweep(Reader& r, const Json& j, SweepConfig& s) {
  const std::string p = "sweep";
  if (!r.object(j, p,
                {"widths", "m_ref", "percentile", "arch", "k", "lambda_l1", "seeds", "alive_threshold", "n_train",
                 "n_eval", "train"})) {
    return;
  }
  r.list(j, "widths", s.widths, p);
  r.field(j, "m_ref", s.m_ref, p);
  r.field(j, "percentile", s.percentile, p);
  r.enumeration(j, "arch", s.arch, p, parse_arch);
  r.field(j, "k", s.k, p);
  r.field(j, "lambda_l1", s.lambda_l1, p);
  r.list(j, "seeds", s.seeds, p);
  r.field(j, "alive_threshold", s.alive_threshold, p);
  r.field(j, "n_train", s.n_train, p);
  r.field(j, "n_eval", s.n_eval, p);
  if (j.contains("train")) read_train(r, j.at("train"), s.train, "sweep.train");
}

void read_attribution(Reader& r, const Json& j, AttributionConfig& a) {
  const std::string p = "attribution";
  if (!r.object(j, p, {"loss_kind", "eps_clamp", "probe"})) return;
  r.enumeration(j, "loss_kind", a.loss_kind, p, parse_loss_kind);
  r.field(j, "eps_clamp", a.eps_clamp, p);
  r.field(j, "probe", a.probe, p);
}

void read_fit(Reader& r, const Json& j, FitConfig& f) {
  const std::string p = "fit";
  if (!r.object(j, p, {"exclude", "bootstrap_replicates", "level", "kappa_max_factor"})) return;
  r.enumeration(j, "exclude", f.exclude, p, parse_exclude_rule);
  r.field(j, "bootstrap_replicates", f.bootstrap_replicates, p);
  r.field(j, "level", f.level, p);
  r.field(j, "kappa_max_factor", f.kappa_max_factor, p);
}

void read_options(Reader& r, const Json& j, ExperimentOptions& o) {
  const std::string p = "options";
  if (!r.object(j, p,
                {"atp_validation", "four_cell", "synthetic_recovery", "geometric_privilege", "sparsity_dependence",
                 "threshold_sensitivity", "planted_rank", "paper_fixtures"})) {
    return;
  }
  if (j.contains("atp_validation")) {
    const Json& s = j.at("atp_validation");
    const std::string q = "options.atp_validation";
    if (r.object(s, q, {"width", "q", "n_samples"})) {
      r.field(s, "width", o.atp_validation.width, q);
      r.field(s, "q", o.atp_validation.q, q);
      r.field(s, "n_samples", o.atp_validation.n_samples, q);
    }
  }
  if (j.contains("four_cell")) {
    const Json& s = j.at("four_cell");
    const std::string q = "options.four_cell";
    if (r.object(s, q, {"width"})) r.field(s, "width", o.four_cell.width, q);
  }
  if (j.contains("synthetic_recovery")) {
    const Json& s = j.at("synthetic_recovery");
    const std::string q = "options.synthetic_recovery";
    if (r.object(s, q, {"widths", "seeds", "cosine_thresholds", "lambda_l1"})) {
      r.list(s, "widths", o.synthetic_recovery.widths, q);
      r.list(s, "seeds", o.synthetic_recovery.seeds, q);
      r.list(s, "cosine_thresholds", o.synthetic_recovery.cosine_thresholds, q);
      r.field(s, "lambda_l1", o.synthetic_recovery.lambda_l1, q);
    }
  }
  if (j.contains("geometric_privilege")) {
    const Json& s = j.at("geometric_privilege");
    const std::string q = "options.geometric_privilege";
    if (r.object(s, q, {"widths", "resamples"})) {
      r.list(s, "widths", o.geometric_privilege.widths, q);
      r.field(s, "resamples", o.geometric_privilege.resamples, q);
    }
  }
  if (j.contains("sparsity_dependence")) {
    const Json& s = j.at("sparsity_dependence");
    const std::string q = "options.sparsity_dependence";
    if (r.object(s, q, {"width", "archs"})) {
      r.field(s, "width", o.sparsity_dependence.width, q);
      r.list(s, "archs", o.sparsity_dependence.archs, q);
    }
  }
  if (j.contains("threshold_sensitivity")) {
    const Json& s = j.at("threshold_sensitivity");
    const std::string q = "options.threshold_sensitivity";
    if (r.object(s, q, {"multipliers", "ratio_limit", "min_pass"})) {
      r.list(s, "multipliers", o.threshold_sensitivity.multipliers, q);
      r.field(s, "ratio_limit", o.threshold_sensitivity.ratio_limit, q);
      r.field(s, "min_pass", o.threshold_sensitivity.min_pass, q);
    }
  }
  if (j.contains("planted_rank")) {
    const Json& s = j.at("planted_rank");
    const std::string q = "options.planted_rank";
    if (r.object(s, q, {"n_samples", "epsilon_prime_rel"})) {
      r.field(s, "n_samples", o.planted_rank.n_samples, q);
      r.field(s, "epsilon_prime_rel", o.planted_rank.epsilon_prime_rel, q);
    }
  }
  if (j.contains("paper_fixtures")) {
    const Json& s = j.at("paper_fixtures");
    const std::string q = "options.paper_fixtures";
    if (r.object(s, q, {"file"})) r.field(s, "file", o.paper_fixtures.file, q);
  }
}

// Violation messages from the library validators read "field: message" or
// "field <= ..." ; the leading token names the field.
ConfigIssue prefixed(const std::string& prefix, const std::string& violation) {
  const auto stop = violation.find_first_of(" :");
  const std::string field = violation.substr(0, stop);
  return {prefix + "." + field, violation};
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<ConfigIssue> issues)
    : ConfigError([&issues] {
        std::string msg = "invalid config:";
        for (const auto& i : issues) msg += "\n  " + i.path + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

const std::vector<std::string>& registered_experiments() {
  static const std::vector<std::string> names = {
      "width_sweep",         "atp_validation",        "four_cell",     "synthetic_recovery", "geometric_privilege",
      "sparsity_dependence", "threshold_sensitivity", "layer_profile", "planted_rank",       "paper_fixtures"};
  return names;
}

std::uint64_t replicate_seed(std::uint64_t run_seed, std::uint64_t replicate) {
  return derive_seed(run_seed, 0x5EED0000ULL + replicate);
}

Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigSyntaxError("config syntax error at line " + std::to_string(line) + ", column " +
                                std::to_string(column) + ": " + e.what(),
                            line, column);
  }
}

RunConfig config_from_json(const Json& j, std::vector<ConfigIssue>& issues) {
  RunConfig c;
  Reader r(issues);
  if (!r.object(j, "",
                {"schema", "experiment", "seed", "output_dir", "tags", "model", "sweep", "attribution", "fit",
                 "options"})) {
    return c;
  }
  if (j.contains("schema")) {
    std::string schema;
    if (r.read(j.at("schema"), schema, "schema") && schema != kConfigSchema) {
      r.issue("schema", "unsupported schema '" + schema + "' (expected " + kConfigSchema + ")");
    }
  }
  r.field(j, "experiment", c.experiment, "");
  r.field(j, "seed", c.seed, "");
  r.field(j, "output_dir", c.output_dir, "");
  r.list(j, "tags", c.tags, "");
  if (j.contains("model")) read_model(r, j.at("model"), c.model);
  if (j.contains("sweep")) read_sweep(r, j.at("sweep"), c.sweep);
  if (j.contains("attribution")) read_attribution(r, j.at("attribution"), c.sweep.attribution);
  if (j.contains("fit")) read_fit(r, j.at("fit"), c.fit);
  if (j.contains("options")) read_options(r, j.at("options"), c.options);
  return c;
}

std::vector<ConfigIssue> config_issues(const RunConfig& c) {
  std::vector<ConfigIssue> out;
  const auto& names = registered_experiments();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    out.push_back({"experiment", "unknown experiment '" + c.experiment + "' (registered: " + list + ")"});
  }
  for (const auto& v : spec_violations(c.model)) {
    ConfigIssue issue = prefixed("model", v);
    issue.message = "GroundTruthSpec bound violated: " + v;
    out.push_back(issue);
  }
  for (const auto& v : sweep_violations(c.sweep)) {
    ConfigIssue issue = prefixed("sweep", v);
    issue.message = "SweepConfig invariant: " + v;
    if (issue.path.rfind("sweep.attribution.", 0) == 0) issue.path = issue.path.substr(6);
    out.push_back(issue);
  }
  if (c.sweep.attribution.probe >= c.model.depth) {
    out.push_back({"attribution.probe", "probe must be < model.depth (" + std::to_string(c.model.depth) + ")"});
  }
  if (!(c.fit.level > 0.0 && c.fit.level < 1.0)) out.push_back({"fit.level", "in (0, 1)"});
  if (c.fit.bootstrap_replicates != 0 && c.fit.bootstrap_replicates < 100) {
    out.push_back({"fit.bootstrap_replicates", "0 (disabled) or >= 100"});
  }
  if (!(c.fit.kappa_max_factor > 0.0)) out.push_back({"fit.kappa_max_factor", "> 0"});
  const auto& o = c.options;
  if (o.atp_validation.width < 1) out.push_back({"options.atp_validation.width", ">= 1"});
  if (!(o.atp_validation.q > 0.0 && o.atp_validation.q <= 100.0)) out.push_back({"options.atp_validation.q", "in (0, 100]"});
  if (o.atp_validation.n_samples < 1) out.push_back({"options.atp_validation.n_samples", ">= 1"});
  if (o.four_cell.width < 1) out.push_back({"options.four_cell.width", ">= 1"});
  if (o.synthetic_recovery.widths.empty()) out.push_back({"options.synthetic_recovery.widths", "at least one width"});
  if (o.synthetic_recovery.seeds.empty()) out.push_back({"options.synthetic_recovery.seeds", "at least one seed"});
  for (double t : o.synthetic_recovery.cosine_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) out.push_back({"options.synthetic_recovery.cosine_thresholds", "each in [0, 1]"});
  }
  if (o.geometric_privilege.widths.empty()) out.push_back({"options.geometric_privilege.widths", "at least one width"});
  for (const auto& a : o.sparsity_dependence.archs) {
    try {
      parse_arch(a);
    } catch (const ConfigError& e) {
      out.push_back({"options.sparsity_dependence.archs", e.what()});
    }
  }
  if (o.threshold_sensitivity.multipliers.empty()) {
    out.push_back({"options.threshold_sensitivity.multipliers", "at least one multiplier"});
  }
  if (!(o.planted_rank.epsilon_prime_rel > 0.0)) out.push_back({"options.planted_rank.epsilon_prime_rel", "> 0"});
  if (o.planted_rank.n_samples < 1) out.push_back({"options.planted_rank.n_samples", ">= 1"});
  if (c.experiment == "layer_profile" && c.model.depth < 2) {
    out.push_back({"model.depth", "layer_profile needs a model with at least 2 probe points (depth >= 2)"});
  }
  return out;
}

Json config_to_json(const RunConfig& c) {
  const auto& o = c.options;
  Json sweep = to_json(c.sweep);
  return {{"schema", kConfigSchema},
          {"experiment", c.experiment},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"tags", c.tags},
          {"model", to_json(c.model)},
          {"sweep", std::move(sweep)},
          {"attribution",
           {{"loss_kind", to_string(c.sweep.attribution.loss_kind)},
            {"eps_clamp", c.sweep.attribution.eps_clamp},
            {"probe", c.sweep.attribution.probe}}},
          {"fit",
           {{"exclude", to_string(c.fit.exclude)},
            {"bootstrap_replicates", c.fit.bootstrap_replicates},
            {"level", c.fit.level},
            {"kappa_max_factor", c.fit.kappa_max_factor}}},
          {"options",
           {{"atp_validation",
             {{"width", o.atp_validation.width}, {"q", o.atp_validation.q}, {"n_samples", o.atp_validation.n_samples}}},
            {"four_cell", {{"width", o.four_cell.width}}},
            {"synthetic_recovery",
             {{"widths", o.synthetic_recovery.widths},
              {"seeds", o.synthetic_recovery.seeds},
              {"cosine_thresholds", o.synthetic_recovery.cosine_thresholds},
              {"lambda_l1", o.synthetic_recovery.lambda_l1}}},
            {"geometric_privilege",
             {{"widths", o.geometric_privilege.widths}, {"resamples", o.geometric_privilege.resamples}}},
            {"sparsity_dependence", {{"width", o.sparsity_dependence.width}, {"archs", o.sparsity_dependence.archs}}},
            {"threshold_sensitivity",
             {{"multipliers", o.threshold_sensitivity.multipliers},
              {"ratio_limit", o.threshold_sensitivity.ratio_limit},
              {"min_pass", o.threshold_sensitivity.min_pass}}},
            {"planted_rank",
             {{"n_samples", o.planted_rank.n_samples}, {"epsilon_prime_rel", o.planted_rank.epsilon_prime_rel}}},
            {"paper_fixtures", {{"file", o.paper_fixtures.file}}}}}};
}

RunConfig load_config_text(const std::string& text) {
  const Json j = parse_config_text(text);
  std::vector<ConfigIssue> issues;
  RunConfig c = config_from_json(j, issues);
  if (issues.empty()) issues = config_issues(c);
  if (!issues.empty()) throw ConfigValidationError(std::move(issues));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return load_config_text(read_file(path)); }

std::vector<ConfigIssue> validate_config(const std::filesystem::path& path) {
  const Json j = parse_config_text(read_file(path));
  std::vector<ConfigIssue> issues;
  const RunConfig c = config_from_json(j, issues);
  if (issues.empty()) issues = config_issues(c);
  return issues;
}

}  // namespace kappa
