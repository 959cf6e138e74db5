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

#include "kappa/serialization.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "kappa/errors.hpp"

namespace kappa {

Json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("expected a number, got " + j.dump());
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols) throw InputError("matrix: data size does not match shape");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Json to_json(const GroundTruthSpec& s) {
  return {{"d", s.d},
          {"n_features", s.n_features},
          {"n_causal", s.n_causal},
          {"active_per_sample", s.active_per_sample},
          {"noise_sigma", s.noise_sigma},
          {"vocab_size", s.vocab_size},
          {"depth", s.depth},
          {"seed", s.seed},
          {"hidden_width", s.hidden_width},
          {"logit_scale", s.logit_scale},
          {"allow_small_vocab", s.allow_small_vocab},
          {"inert_complement", s.inert_complement},
          {"causal_rate_scale", s.causal_rate_scale},
          {"causal_coef_scale", s.causal_coef_scale}};
}

Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"holdout_fraction", c.holdout_fraction},
          {"resample_dead", c.resample_dead},
          {"init_decoder_bias_to_mean", c.init_decoder_bias_to_mean},
          {"jumprelu_percentile", c.jumprelu_percentile}};
}

Json to_json(const AttributionConfig& c) {
  return {{"loss_kind", to_string(c.loss_kind)}, {"eps_clamp", c.eps_clamp}, {"probe", c.probe}};
}

Json to_json(const SweepConfig& c) {
  return {{"widths", c.widths},
          {"m_ref", c.m_ref},
          {"percentile", c.percentile},
          {"arch", to_string(c.arch)},
          {"k", c.k},
          {"lambda_l1", c.lambda_l1},
          {"seeds", c.seeds},
          {"alive_threshold", c.alive_threshold},
          {"n_train", c.n_train},
          {"n_eval", c.n_eval},
          {"train", to_json(c.train)}};
}

Json to_json(const WidthPoint& p) {
  return {{"m", p.m},
          {"n_causal", p.n_causal},
          {"n_repr", p.n_repr},
          {"epsilon_abs", number(p.epsilon_abs)},
          {"kappa_pr", number(p.kappa_pr)},
          {"mean_l0", number(p.mean_l0)},
          {"mse", number(p.mse)}};
}

Json to_json(const Calibration& c) {
  return {{"epsilon_abs", number(c.epsilon_abs)}, {"percentile", c.percentile},
          {"reference_width", c.reference_width}, {"target_count", c.target_count},
          {"realized_count", c.realized_count},   {"degenerate", c.degenerate},
          {"warnings", c.warnings}};
}

Json to_json(const Interval& i) { return Json::array({number(i.lo), number(i.hi)}); }

Json to_json(const FitResult& f) {
  Json j = {{"kappa_hat", number(f.kappa_hat)},
            {"tau_hat", number(f.tau_hat)},
            {"kappa_se", number(f.kappa_se)},
            {"tau_se", number(f.tau_se)},
            {"wald_ci_95", to_json(f.wald_ci_95)},
            {"tau_wald_ci_95", to_json(f.tau_wald_ci_95)},
            {"bootstrap_ci_95", f.bootstrap_ci_95 ? to_json(*f.bootstrap_ci_95) : Json()},
            {"bootstrap_median", f.bootstrap_median ? number(*f.bootstrap_median) : Json()},
            {"n_points_used", f.n_points_used},
            {"excluded_pre_minimum", f.excluded_pre_minimum},
            {"rss", number(f.rss)},
            {"at_bound", f.at_bound},
            {"warnings", f.warnings}};
  return j;
}

Json to_json(const DipFitResult& f) {
  return {{"kappa_hat", number(f.kappa_hat)},     {"tau_hat", number(f.tau_hat)},
          {"dip_amplitude", number(f.dip_amplitude)}, {"dip_center", number(f.dip_center)},
          {"dip_width", number(f.dip_width)},     {"rss", number(f.rss)},
          {"n_points_used", f.n_points_used},     {"at_bound", f.at_bound}};
}

Json to_json(const BootstrapResult& b) {
  return {{"kappa_ci", to_json(b.kappa_ci)},
          {"kappa_median", number(b.kappa_median)},
          {"tau_ci", to_json(b.tau_ci)},
          {"n_success", b.n_success},
          {"n_replicates", b.n_replicates}};
}

Json to_json(const WedgeReport& w) {
  Json j = {{"m_ref", w.m_ref},
            {"m_max", w.m_max},
            {"n_causal_ref", w.n_causal_ref},
            {"n_causal_max", w.n_causal_max},
            {"causal_ratio", number(w.causal_ratio)},
            {"n_repr_ref", w.n_repr_ref},
            {"n_repr_max", w.n_repr_max},
            {"repr_ratio", number(w.repr_ratio)},
            {"width_ratio", number(w.width_ratio)}};
  if (w.causal_ci) {
    j["causal_ci_95"] = to_json(w.causal_ci->ci);
    j["causal_ci_median"] = number(w.causal_ci->median);
  }
  return j;
}

Json to_json(const SensitivityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"multiplier", row.multiplier},
                    {"epsilon_abs", number(row.epsilon_abs)},
                    {"n_ref", row.n_ref},
                    {"n_max", row.n_max},
                    {"ratio", number(row.ratio)},
                    {"pass", row.pass}});
  }
  return {{"rows", std::move(rows)},
          {"n_pass", r.n_pass},
          {"overall", r.overall_pass ? "PASS" : "FAIL"},
          {"ratio_limit", r.ratio_limit},
          {"min_pass", r.min_pass}};
}

Json to_json(const FourCellResult& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"label", c.label},
                     {"m", c.m},
                     {"n_causal", c.n_causal},
                     {"n_repr", c.n_repr},
                     {"utilisation", number(c.utilisation)}});
  }
  return {{"epsilon_abs", number(r.epsilon_abs)}, {"cells", std::move(cells)}};
}

Json to_json(const RecoveryCell& c) {
  Json pairs = Json::array();
  for (const auto& p : c.matched_pairs) {
    pairs.push_back({{"sae_feature", p.sae_feature}, {"ground_truth", p.ground_truth}, {"cosine", p.cosine}});
  }
  return {{"width", c.width},
          {"seed", c.seed},
          {"cosine_threshold", c.cosine_threshold},
          {"n_selected", c.n_selected},
          {"precision", c.precision},
          {"recall", c.recall},
          {"matched_pairs", std::move(pairs)}};
}

Json to_json(const PrivilegeReport& r) {
  auto stats = [](const SetStats& s) {
    return Json{{"mean_decoder_norm", number(s.mean_decoder_norm)}, {"mean_abs_cosine", number(s.mean_abs_cosine)}};
  };
  return {{"causal", stats(r.causal)},
          {"control", stats(r.control)},
          {"norm_gap", number(r.norm_gap)},
          {"cosine_gap", number(r.cosine_gap)},
          {"norm_gap_se", number(r.norm_gap_se)},
          {"cosine_gap_se", number(r.cosine_gap_se)},
          {"causal_set", r.causal_set},
          {"control_set", r.control_set},
          {"max_relative_magnitude_gap", number(r.max_relative_magnitude_gap)},
          {"matching", r.matching}};
}

Json to_json(const LayerPoint& p) {
  return {{"probe", p.probe},
          {"epsilon_abs", number(p.epsilon_abs)},
          {"n_causal", p.n_causal},
          {"n_repr", p.n_repr},
          {"kappa_pr", number(p.kappa_pr)}};
}

Json to_json(const KappaEstimate& e) {
  return {{"eff_rank", number(e.eff_rank)},
          {"spectral_count", e.spectral_count},
          {"participation_ratio", number(e.participation_ratio)},
          {"epsilon_prime", number(e.epsilon_prime)}};
}

Json to_json(const ValidationReport& r) {
  return {{"spearman_global", number(r.spearman_global)},
          {"spearman_top_q", number(r.spearman_top_q)},
          {"threshold_agreement", number(r.threshold_agreement)},
          {"q", r.q},
          {"n_features", r.n_features},
          {"n_top_q", r.n_top_q}};
}

Json model_to_json(const GroundTruthModel& model) {
  Json head = Json::array();
  for (const auto& layer : model.head) {
    head.push_back({{"weight", matrix_to_json(layer.weight)},
                    {"bias", vector_to_json(layer.bias)},
                    {"nonlinear", layer.nonlinear}});
  }
  return {{"schema", kModelSchema},
          {"spec", to_json(model.spec)},
          {"seed", model.spec.seed},
          {"activation_kind", model.activation_kind},
          {"directions", matrix_to_json(model.dictionary.directions)},
          {"causal_index_set", model.dictionary.causal_index_set},
          {"causal_projector", matrix_to_json(model.causal_projector)},
          {"head", std::move(head)}};
}

GroundTruthModel model_from_json(const Json& j) {
  if (j.value("schema", "") != kModelSchema) throw InputError(std::string("model document: expected schema ") + kModelSchema);
  GroundTruthModel model;
  const Json& s = j.at("spec");
  GroundTruthSpec& spec = model.spec;
  spec.d = s.at("d").get<std::size_t>();
  spec.n_features = s.at("n_features").get<std::size_t>();
  spec.n_causal = s.at("n_causal").get<std::size_t>();
  spec.active_per_sample = s.at("active_per_sample").get<std::size_t>();
  spec.noise_sigma = s.at("noise_sigma").get<double>();
  spec.vocab_size = s.at("vocab_size").get<std::size_t>();
  spec.depth = s.at("depth").get<std::size_t>();
  spec.seed = s.at("seed").get<std::uint64_t>();
  spec.hidden_width = s.at("hidden_width").get<std::size_t>();
  spec.logit_scale = s.at("logit_scale").get<double>();
  spec.allow_small_vocab = s.at("allow_small_vocab").get<bool>();
  spec.inert_complement = s.at("inert_complement").get<bool>();
  spec.causal_rate_scale = s.at("causal_rate_scale").get<double>();
  spec.causal_coef_scale = s.at("causal_coef_scale").get<double>();
  model.activation_kind = j.at("activation_kind").get<std::string>();
  model.dictionary.directions = matrix_from_json(j.at("directions"));
  model.dictionary.causal_index_set = j.at("causal_index_set").get<std::vector<std::size_t>>();
  model.causal_projector = matrix_from_json(j.at("causal_projector"));
  for (const auto& layer : j.at("head")) {
    model.head.push_back(
        {matrix_from_json(layer.at("weight")), vector_from_json(layer.at("bias")), layer.at("nonlinear").get<bool>()});
  }
  return model;
}

Json batch_to_json(const std::vector<ActivationSample>& samples, std::uint64_t seed) {
  Json rows = Json::array();
  for (const auto& s : samples) {
    rows.push_back({{"h", vector_to_json(s.h)}, {"active_set", s.active_set}, {"coefficients", s.coefficients}});
  }
  return {{"schema", kBatchSchema}, {"seed", seed}, {"samples", std::move(rows)}};
}

std::vector<ActivationSample> batch_from_json(const Json& j) {
  if (j.value("schema", "") != kBatchSchema) throw InputError(std::string("batch document: expected schema ") + kBatchSchema);
  std::vector<ActivationSample> out;
  for (const auto& row : j.at("samples")) {
    out.push_back({vector_from_json(row.at("h")), row.at("active_set").get<std::vector<std::size_t>>(),
                   row.at("coefficients").get<std::vector<double>>()});
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InputError("SAE checkpoint: truncated file");
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
}

Matrix get_matrix(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = get<double>(in);
  }
  return m;
}

}  // namespace

void save_sae(const std::filesystem::path& path, const SaeParams& sae) {
  std::ostringstream out(std::ios::binary);
  out.write(kSaeMagic, 4);
  put<std::uint32_t>(out, kSaeFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sae.arch));
  put<std::uint64_t>(out, sae.k);
  put<double>(out, sae.lambda_l1);
  put<std::uint64_t>(out, sae.width());
  put<std::uint64_t>(out, sae.dim());
  put_matrix(out, sae.w_enc);
  put_matrix(out, sae.b_enc.transpose());
  put_matrix(out, sae.w_dec);
  put_matrix(out, sae.b_dec.transpose());
  put_matrix(out, sae.theta.transpose());
  write_atomic(path, out.str());
}

SaeParams load_sae(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open SAE checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kSaeMagic, 4) != 0) throw InputError("not an SAE checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kSaeFormatVersion) {
    throw InputError("SAE checkpoint format version " + std::to_string(version) + " is not supported");
  }
  SaeParams sae;
  const auto arch = get<std::uint32_t>(in);
  if (arch > 2) throw InputError("SAE checkpoint: unknown architecture code");
  sae.arch = static_cast<SaeArch>(arch);
  sae.k = get<std::uint64_t>(in);
  sae.lambda_l1 = get<double>(in);
  const auto m = static_cast<Index>(get<std::uint64_t>(in));
  const auto d = static_cast<Index>(get<std::uint64_t>(in));
  sae.w_enc = get_matrix(in, m, d);
  sae.b_enc = get_matrix(in, 1, m).transpose();
  sae.w_dec = get_matrix(in, m, d);
  sae.b_dec = get_matrix(in, 1, d).transpose();
  sae.theta = get_matrix(in, 1, m).transpose();
  return sae;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot move results into place at " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kappa
