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

#include "kappa/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "kappa/bootstrap.hpp"
#include "kappa/calibration.hpp"
#include "kappa/controls.hpp"
#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/serialization.hpp"
#include "kappa/spectral.hpp"
#include "kappa/stats.hpp"
#include "kappa/sweep.hpp"

namespace kappa {

namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

KappaEstimate planted_estimate(const GroundTruthModel& model, std::size_t probe, std::size_t n_samples,
                               double epsilon_prime_rel, std::uint64_t seed, Spectrum* spectrum_out = nullptr) {
  const Matrix inputs = activation_matrix(sample_batch(model, n_samples, derive_seed(seed, 0xC0FFEE)));
  const Matrix sigma = sigma_true_from(model, probe, probe_activations(model, probe, inputs));
  const Spectrum spectrum = eigenspectrum(sigma);
  const double lmax = spectrum.eigenvalues.empty() ? 0.0 : spectrum.eigenvalues.front();
  KappaEstimate est;
  est.epsilon_prime = epsilon_prime_rel * lmax;
  if (!spectrum.eigenvalues.empty()) {
    est.eff_rank = effective_rank(spectrum);
    est.spectral_count = spectral_count(spectrum, est.epsilon_prime);
    est.participation_ratio = participation_ratio(spectrum.eigenvalues);
  }
  if (spectrum_out) *spectrum_out = spectrum;
  return est;
}

FitOptions fit_options(const RunConfig& config, std::size_t dim) {
  FitOptions o;
  o.exclude = config.fit.exclude;
  o.kappa_max = config.fit.kappa_max_factor * static_cast<double>(dim);
  return o;
}

Json error_block(const std::exception& e) { return {{"error", e.what()}}; }

std::size_t probe_dim(const GroundTruthModel& model, const RunConfig& config) {
  return static_cast<std::size_t>(model.probe_dim(config.sweep.attribution.probe));
}

// ---------------------------------------------------------------- width_sweep

Json sweep_replicate(const GroundTruthModel& model, const RunConfig& config, std::uint64_t replicate,
                     const RunContext& ctx, SweepResult* keep = nullptr) {
  const std::uint64_t seed = replicate_seed(config.seed, replicate);
  SweepHooks hooks;
  hooks.jobs = ctx.jobs;
  if (!ctx.checkpoint_dir.empty()) {
    hooks.on_width_trained = [&](const WidthRun& run) {
      save_sae(ctx.checkpoint_dir / ("sae_r" + std::to_string(replicate) + "_m" + std::to_string(run.m) + ".ksae"),
               run.sae);
    };
  }
  SweepResult result = run_width_sweep(model, config.sweep, seed, hooks);

  Json rep = {{"replicate", replicate}, {"seed", seed}, {"calibration", to_json(result.calibration)}};
  Json points = Json::array();
  for (const auto& p : result.points) points.push_back(to_json(p));
  rep["points"] = std::move(points);
  Json curves = Json::object();
  for (const auto& r : result.runs) curves[std::to_string(r.m)] = r.learning_curve;
  rep["learning_curves"] = std::move(curves);

  const FitOptions fo = fit_options(config, probe_dim(model, config));
  const auto curve = result.causal_curve();
  try {
    FitResult fit = fit_saturating(curve, fo);
    if (config.fit.bootstrap_replicates > 0) {
      BootstrapOptions bo;
      bo.replicates = config.fit.bootstrap_replicates;
      bo.seed = derive_seed(seed, 0xB007);
      bo.level = config.fit.level;
      bo.jobs = ctx.jobs;
      bo.fit = fo;
      try {
        const auto scores = result.width_scores();
        BootstrapResult boot = bootstrap_fit(scores, result.calibration.epsilon_abs, bo);
        fit = boot.point;
        rep["bootstrap"] = to_json(boot);
      } catch (const Error& e) {
        rep["bootstrap"] = error_block(e);
      }
    }
    rep["fit"] = to_json(fit);
  } catch (const Error& e) {
    rep["fit"] = error_block(e);
  }
  if (curve.size() >= 6) {
    try {
      rep["dip_fit"] = to_json(fit_saturating_with_dip(curve, fo));
    } catch (const Error& e) {
      rep["dip_fit"] = error_block(e);
    }
  }
  try {
    WedgeReport wedge = wedge_ratio(result.points, config.sweep.m_ref);
    if (config.fit.bootstrap_replicates > 0) {
      const auto scores = result.width_scores();
      const auto ref = std::find_if(scores.begin(), scores.end(),
                                    [&](const WidthScores& w) { return w.m == static_cast<double>(config.sweep.m_ref); });
      try {
        wedge.causal_ci = bootstrap_count_ratio(*ref, scores.back(), result.calibration.epsilon_abs,
                                                config.fit.bootstrap_replicates, derive_seed(seed, 0x3ED6E),
                                                config.fit.level);
      } catch (const Error&) {
      }
    }
    rep["wedge"] = to_json(wedge);
  } catch (const Error& e) {
    rep["wedge"] = error_block(e);
  }
  if (keep) *keep = std::move(result);
  return rep;
}

ExperimentOutput width_sweep(const RunConfig& config, const RunContext& ctx) {
  const GroundTruthModel model = generate_model(config.model);
  const KappaEstimate planted = planted_estimate(model, config.sweep.attribution.probe,
                                                 config.options.planted_rank.n_samples,
                                                 config.options.planted_rank.epsilon_prime_rel, config.seed);
  Json replicates = Json::array();
  for (std::uint64_t r : config.sweep.seeds) {
    try {
      replicates.push_back(sweep_replicate(model, config, r, ctx));
    } catch (const SweepError& e) {
      throw ExperimentError(e.what(), Json{{"planted", to_json(planted)}, {"replicates", replicates}});
    }
  }

  const std::size_t n_w = config.sweep.widths.size();
  Json mean_rows = Json::array();
  Json seed_rows = Json::array();
  for (std::size_t i = 0; i < n_w; ++i) {
    double nc = 0, nr = 0, eps = 0, pr = 0;
    for (const auto& rep : replicates) {
      const auto& p = rep["points"][i];
      nc += p["n_causal"].get<double>();
      nr += p["n_repr"].get<double>();
      eps += to_double(p["epsilon_abs"]);
      pr += to_double(p["kappa_pr"]);
      seed_rows.push_back({rep["replicate"], p["m"], p["n_causal"], p["n_repr"], p["epsilon_abs"], p["kappa_pr"]});
    }
    const double k = static_cast<double>(replicates.size());
    mean_rows.push_back({config.sweep.widths[i], nc / k, nr / k, number(eps / k), number(pr / k)});
  }

  Json verdict;
  {
    double n_max = 0;
    bool sub_linear = true;
    for (const auto& rep : replicates) {
      n_max += rep["points"].back()["n_causal"].get<double>();
      if (!rep["wedge"].contains("causal_ratio") ||
          !(to_double(rep["wedge"]["causal_ratio"]) < to_double(rep["wedge"]["width_ratio"]))) {
        sub_linear = false;
      }
    }
    n_max /= static_cast<double>(replicates.size());
    const double sc = static_cast<double>(planted.spectral_count);
    const double gap = sc > 0 ? std::abs(n_max - sc) / sc : std::numeric_limits<double>::infinity();
    verdict = {{"n_causal_m_max_mean", n_max},
               {"spectral_count", planted.spectral_count},
               {"relative_gap", number(gap)},
               {"within_15_percent", gap <= 0.15},
               {"sub_linear", sub_linear}};
  }

  Json tables = {
      {"sweep", make_table({"m", "n_causal", "n_repr", "epsilon_abs", "kappa_pr"}, std::move(mean_rows), "m",
                           {"n_causal", "n_repr"}, true)},
      {"sweep_seeds", make_table({"replicate", "m", "n_causal", "n_repr", "epsilon_abs", "kappa_pr"},
                                 std::move(seed_rows), "m", {"n_causal", "n_repr"}, true)}};
  ExperimentOutput out;
  out.payload = {{"planted", to_json(planted)}, {"replicates", std::move(replicates)}, {"tables", std::move(tables)}};
  out.verdict = std::move(verdict);
  return out;
}

// ------------------------------------------------------------- atp_validation

ExperimentOutput atp_validation(const RunConfig& config, const RunContext&) {
  const auto& o = config.options.atp_validation;
  const GroundTruthModel model = generate_model(config.model);
  SweepConfig sc = config.sweep;
  sc.n_eval = o.n_samples;
  const SweepData data = sweep_data(model, sc, config.seed);
  const WidthRun run = train_width(model, sc, data, o.width, config.seed);
  std::vector<std::size_t> all(o.width);
  for (std::size_t i = 0; i < o.width; ++i) all[i] = i;
  const ExactPatchResult exact = exact_patch(model, run.sae, data.eval, all, sc.attribution);
  const ValidationReport report = validate_atp(run.atp, exact, o.q);

  Json rows = Json::array();
  for (std::size_t i = 0; i < o.width; ++i) {
    rows.push_back({i, run.atp.scores(static_cast<Index>(i)), exact.effects(static_cast<Index>(i))});
  }
  ExperimentOutput out;
  out.payload = {{"width", o.width},
                 {"n_samples", o.n_samples},
                 {"loss_kind", to_string(sc.attribution.loss_kind)},
                 {"validation", to_json(report)},
                 {"tables", {{"atp_vs_exact", make_table({"feature", "atp", "exact"}, std::move(rows), "atp", {"exact"}, true)}}}};
  out.verdict = Json{{"spearman_top_q", number(report.spearman_top_q)},
                     {"q", o.q},
                     {"top_q_at_least_0_8", report.spearman_top_q >= 0.8}};
  return out;
}

// ------------------------------------------------------------------ four_cell

ExperimentOutput four_cell_experiment(const RunConfig& config, const RunContext&) {
  const GroundTruthModel model = generate_model(config.model);
  const SweepData data = sweep_data(model, config.sweep, config.seed);
  const std::size_t m = config.options.four_cell.width;
  const WidthRun run = train_width(model, config.sweep, data, m, config.seed);
  Calibration cal = calibrate_threshold(as_span(run.atp.scores), config.sweep.percentile);
  cal.reference_width = m;
  FourCellOptions fo;
  fo.attribution = config.sweep.attribution;
  fo.alive_threshold = config.sweep.alive_threshold;
  const FourCellResult result = four_cell(model, run.sae, data.eval, cal.epsilon_abs, derive_seed(config.seed, 4), fo);

  Json rows = Json::array();
  for (const auto& c : result.cells) rows.push_back({c.label, c.m, c.n_causal, c.n_repr, c.utilisation});
  const auto& real = result.cell("REAL");
  const auto& renc = result.cell("RANDOM_ENC");
  ExperimentOutput out;
  out.payload = {{"calibration", to_json(cal)},
                 {"result", to_json(result)},
                 {"tables", {{"four_cell", make_table({"label", "m", "n_causal", "n_repr", "utilisation"},
                                                      std::move(rows), "label", {"n_causal", "n_repr"}, false)}}}};
  out.verdict = Json{{"random_enc_inflates_n_causal", renc.n_causal > real.n_causal},
                     {"random_enc_utilisation_above_0_9", renc.utilisation > 0.9},
                     {"inflation", real.n_causal == 0 ? number(std::numeric_limits<double>::infinity())
                                                      : number(static_cast<double>(renc.n_causal) /
                                                               static_cast<double>(real.n_causal))}};
  return out;
}

// --------------------------------------------------------- synthetic_recovery

ExperimentOutput synthetic_recovery_experiment(const RunConfig& config, const RunContext& ctx) {
  const auto& rc = config.options.synthetic_recovery;
  RecoveryOptions ro;
  ro.widths = rc.widths;
  ro.seeds.clear();
  for (auto s : rc.seeds) ro.seeds.push_back(replicate_seed(config.seed, s));
  ro.cosine_thresholds = rc.cosine_thresholds;
  ro.percentile = config.sweep.percentile;
  ro.lambda_l1 = rc.lambda_l1;
  ro.n_train = config.sweep.n_train;
  ro.n_eval = config.sweep.n_eval;
  ro.train = config.sweep.train;
  ro.attribution = config.sweep.attribution;
  ro.attribution.probe = 0;
  ro.jobs = ctx.jobs;
  const auto cells = synthetic_recovery(config.model, ro);

  const GroundTruthModel model = generate_model(config.model);
  const Matrix truth = causal_directions(model);
  std::vector<std::size_t> every(static_cast<std::size_t>(truth.rows()));
  for (std::size_t i = 0; i < every.size(); ++i) every[i] = i;
  Json oracle = Json::array();
  double oracle_min = 1.0;
  for (double thr : rc.cosine_thresholds) {
    const RecoveryCell c = score_recovery(truth, every, truth, thr);
    oracle_min = std::min(oracle_min, c.recall);
    oracle.push_back({{"cosine_threshold", thr}, {"precision", c.precision}, {"recall", c.recall}});
  }
  Rng null_rng = make_rng(config.seed, 0x9011);
  const Matrix random_rows = random_unit_rows(1000, static_cast<Index>(config.model.d), null_rng);
  std::vector<std::size_t> all_random(1000);
  for (std::size_t i = 0; i < all_random.size(); ++i) all_random[i] = i;
  Json null_model = Json::array();
  for (double thr : rc.cosine_thresholds) {
    const RecoveryCell c = score_recovery(random_rows, all_random, truth, thr);
    null_model.push_back({{"cosine_threshold", thr}, {"precision", c.precision}, {"recall", c.recall}});
  }

  Json rows = Json::array(), list = Json::array();
  double recall_sum = 0.0;
  for (const auto& c : cells) {
    rows.push_back({c.width, c.seed, c.cosine_threshold, c.n_selected, c.precision, c.recall});
    list.push_back(to_json(c));
    recall_sum += c.recall;
  }
  const double mean_recall = cells.empty() ? 0.0 : recall_sum / static_cast<double>(cells.size());
  ExperimentOutput out;
  out.payload = {{"cells", std::move(list)},
                 {"oracle_scorer", std::move(oracle)},
                 {"random_rows_null", std::move(null_model)},
                 {"tables", {{"recovery", make_table({"width", "seed", "cosine_threshold", "n_selected", "precision", "recall"},
                                                     std::move(rows), "width", {"recall", "precision"}, true)}}}};
  out.verdict = Json{{"n_cells", cells.size()},
                     {"mean_recall", mean_recall},
                     {"oracle_recall_min", oracle_min},
                     {"mean_recall_below_0_1", mean_recall < 0.1}};
  return out;
}

// -------------------------------------------------------- geometric_privilege

ExperimentOutput geometric_privilege_experiment(const RunConfig& config, const RunContext&) {
  const GroundTruthModel model = generate_model(config.model);
  const SweepData data = sweep_data(model, config.sweep, config.seed);
  Json reports = Json::array(), rows = Json::array();
  for (std::size_t m : config.options.geometric_privilege.widths) {
    const WidthRun run = train_width(model, config.sweep, data, m, config.seed);
    const Calibration cal = calibrate_threshold(as_span(run.atp.scores), config.sweep.percentile);
    std::vector<std::size_t> causal;
    for (Index i = 0; i < run.atp.scores.size(); ++i) {
      if (run.atp.scores(i) >= cal.epsilon_abs) causal.push_back(static_cast<std::size_t>(i));
    }
    try {
      const PrivilegeReport r = geometric_privilege(run.sae, feature_magnitudes(run.sae, data.eval), causal,
                                                    derive_seed(config.seed, 7000 + m),
                                                    config.options.geometric_privilege.resamples);
      Json j = to_json(r);
      j["width"] = m;
      reports.push_back(std::move(j));
      rows.push_back({m, causal.size(), r.norm_gap, r.norm_gap_se, r.cosine_gap, r.cosine_gap_se});
    } catch (const MatchingError& e) {
      reports.push_back({{"width", m}, {"error", e.what()}});
    }
  }
  ExperimentOutput out;
  out.payload = {{"reports", std::move(reports)},
                 {"tables", {{"privilege", make_table({"m", "n_causal", "norm_gap", "norm_gap_se", "cosine_gap", "cosine_gap_se"},
                                                      std::move(rows), "m", {"cosine_gap"}, true)}}}};
  return out;
}

// -------------------------------------------------------- sparsity_dependence

ExperimentOutput sparsity_dependence_experiment(const RunConfig& config, const RunContext&) {
  const GroundTruthModel model = generate_model(config.model);
  const SweepData data = sweep_data(model, config.sweep, config.seed);
  std::vector<SparsityEntry> entries;
  for (const auto& name : config.options.sparsity_dependence.archs) {
    SweepConfig sc = config.sweep;
    sc.arch = parse_arch(name);
    const WidthRun run = train_width(model, sc, data, config.options.sparsity_dependence.width, config.seed);
    const Calibration cal = calibrate_threshold(as_span(run.atp.scores), sc.percentile);
    entries.push_back({name, run.firing.firing_freq, run.atp.scores, cal.epsilon_abs});
  }
  const SparsityReport report = sparsity_dependence(entries);
  Json rows = Json::array(), per_arch = Json::object();
  for (const auto& [arch, rho] : report.per_arch) {
    rows.push_back({arch, rho});
    per_arch[arch] = rho;
  }
  rows.push_back({"ALL", report.global});
  ExperimentOutput out;
  out.payload = {{"per_arch", std::move(per_arch)},
                 {"global", report.global},
                 {"tables", {{"sparsity", make_table({"arch", "spearman"}, std::move(rows), "arch", {"spearman"}, false)}}}};
  return out;
}

// ------------------------------------------------------ threshold_sensitivity

ExperimentOutput threshold_sensitivity_experiment(const RunConfig& config, const RunContext& ctx) {
  const GroundTruthModel model = generate_model(config.model);
  RunConfig single = config;
  single.fit.bootstrap_replicates = 0;
  SweepResult sweep;
  const Json rep = sweep_replicate(model, single, config.sweep.seeds.front(), ctx, &sweep);
  const auto scores = sweep.width_scores();
  const auto ref = std::find_if(scores.begin(), scores.end(),
                                [&](const WidthScores& w) { return w.m == static_cast<double>(config.sweep.m_ref); });
  const auto& o = config.options.threshold_sensitivity;
  const SensitivityReport report =
      threshold_sensitivity(*ref, scores.back(), sweep.calibration.epsilon_abs, o.multipliers, o.ratio_limit, o.min_pass);
  Json rows = Json::array();
  for (const auto& r : report.rows) rows.push_back({r.multiplier, r.epsilon_abs, r.n_ref, r.n_max, number(r.ratio), r.pass});
  ExperimentOutput out;
  out.payload = {{"sweep", rep},
                 {"sensitivity", to_json(report)},
                 {"tables", {{"sensitivity", make_table({"multiplier", "epsilon_abs", "n_ref", "n_max", "ratio", "pass"},
                                                        std::move(rows), "multiplier", {"ratio"}, true)}}}};
  out.verdict = Json{{"n_pass", report.n_pass}, {"overall", report.overall_pass ? "PASS" : "FAIL"}};
  return out;
}

// -------------------------------------------------------------- layer_profile

ExperimentOutput layer_profile_experiment(const RunConfig& config, const RunContext& ctx) {
  const GroundTruthModel model = generate_model(config.model);
  const auto layers = layer_profile(model, config.sweep, config.seed, ctx.jobs);
  Json list = Json::array(), rows = Json::array();
  for (const auto& l : layers) {
    list.push_back(to_json(l));
    rows.push_back({l.probe, l.epsilon_abs, l.n_causal, l.n_repr, l.kappa_pr});
  }
  ExperimentOutput out;
  out.payload = {{"layers", std::move(list)},
                 {"tables", {{"layers", make_table({"probe", "epsilon_abs", "n_causal", "n_repr", "kappa_pr"},
                                                   std::move(rows), "probe", {"epsilon_abs"}, false)}}}};
  return out;
}

// --------------------------------------------------------------- planted_rank

ExperimentOutput planted_rank_experiment(const RunConfig& config, const RunContext&) {
  const GroundTruthModel model = generate_model(config.model);
  const auto& o = config.options.planted_rank;
  Json probes = Json::array(), rows = Json::array();
  bool bounds_ok = true;
  for (std::size_t p = 0; p < model.probe_count(); ++p) {
    Spectrum spectrum;
    const KappaEstimate est = planted_estimate(model, p, o.n_samples, o.epsilon_prime_rel, config.seed, &spectrum);
    const BoundReport bound = check_dimension_bound(est, static_cast<std::size_t>(model.probe_dim(p)), config.model.vocab_size);
    bounds_ok = bounds_ok && bound.ok;
    probes.push_back({{"probe", p}, {"estimate", to_json(est)}, {"bound", {{"ok", bound.ok}, {"report", bound.report}}},
                      {"eigenvalues", spectrum.eigenvalues}});
    for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i) rows.push_back({p, i, spectrum.eigenvalues[i]});
  }
  ExperimentOutput out;
  out.payload = {{"n_causal", config.model.n_causal},
                 {"probes", std::move(probes)},
                 {"tables", {{"spectrum", make_table({"probe", "index", "eigenvalue"}, std::move(rows), "index",
                                                     {"eigenvalue"}, false)}}}};
  out.verdict = Json{{"bounds_ok", bounds_ok}};
  return out;
}

// ------------------------------------------------------------- paper_fixtures

double rel_err(double got, double want) { return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want); }

ExperimentOutput paper_fixtures_experiment(const RunConfig& config, const RunContext&) {
  const Json fx = load_fixtures(config.options.paper_fixtures.file);
  const double d = fx.at("model_dim").get<double>();
  const auto& traj = fx.at("matched_l0_trajectory");
  const auto widths = traj.at("widths").get<std::vector<double>>();
  const auto counts = traj.at("n_causal").get<std::vector<double>>();
  std::vector<CurvePoint> points;
  for (std::size_t i = 0; i < widths.size(); ++i) points.push_back({widths[i], counts[i]});

  FitOptions fo;
  fo.exclude = ExcludeRule::PostMinimum;
  fo.kappa_max = config.fit.kappa_max_factor * d;
  const FitResult fit = fit_saturating(points, fo);
  const auto& ref = fx.at("fit_reference");

  const auto& w = fx.at("wedge");
  const auto nc = w.at("n_causal").get<std::vector<std::size_t>>();
  const auto nr = w.at("n_repr").get<std::vector<std::size_t>>();
  std::vector<WidthPoint> wp = {{w.at("m_ref").get<std::size_t>(), nc[0], nr[0], 0, 0, 0, 0},
                                {w.at("m_max").get<std::size_t>(), nc[1], nr[1], 0, 0, 0, 0}};
  const WedgeReport wedge = wedge_ratio(wp, wp[0].m);

  const auto& ts = fx.at("threshold_sensitivity");
  const auto mult = ts.at("multipliers").get<std::vector<double>>();
  const auto ratios = ts.at("ratios").get<std::vector<double>>();
  const SensitivityReport sens = sensitivity_verdict(mult, ratios, ts.at("ratio_limit").get<double>(),
                                                     ts.at("min_pass").get<std::size_t>());

  const auto& fc = fx.at("four_cell").at("n_causal");
  const double real = fc.at("REAL").get<double>();
  const double inflation = fc.at("RANDOM_ENC").get<double>() / real;
  const double dec_loss = 1.0 - fc.at("RANDOM_DEC").get<double>() / real;

  const auto& cal = fx.at("calibration");
  const std::size_t target =
      top_fraction_count(cal.at("m_ref").get<std::size_t>(), cal.at("percentile").get<double>());

  const double curve_at_max = saturating_curve(widths.back(), ref.at("kappa_hat").get<double>(), ref.at("tau_hat").get<double>());

  Json rows = Json::array();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    rows.push_back({widths[i], counts[i], saturating_curve(widths[i], fit.kappa_hat, fit.tau_hat)});
  }
  ExperimentOutput out;
  out.payload = {
      {"fixture_format", fx.at("format")},
      {"fit", to_json(fit)},
      {"fit_reference", ref},
      {"curve_at_m_max_from_reference", curve_at_max},
      {"wedge", to_json(wedge)},
      {"sensitivity", to_json(sens)},
      {"calibration_target_count", target},
      {"four_cell_random_enc_inflation", inflation},
      {"four_cell_random_dec_loss", dec_loss},
      {"tables", {{"trajectory", make_table({"m", "n_causal", "fit"}, std::move(rows), "m", {"n_causal", "fit"}, true)}}}};
  out.verdict = Json{{"kappa_hat_rel_err", rel_err(fit.kappa_hat, ref.at("kappa_hat").get<double>())},
                     {"tau_hat_rel_err", rel_err(fit.tau_hat, ref.at("tau_hat").get<double>())},
                     {"wald_upper_rel_err", rel_err(fit.wald_ci_95.hi, ref.at("wald_ci_95")[1].get<double>())},
                     {"causal_ratio", wedge.causal_ratio},
                     {"repr_ratio", wedge.repr_ratio},
                     {"sensitivity_n_pass", sens.n_pass},
                     {"sensitivity_overall", sens.overall_pass ? "PASS" : "FAIL"},
                     {"sensitivity_matches_published",
                      sens.n_pass == ts.at("n_pass").get<std::size_t>() &&
                          (sens.overall_pass ? "PASS" : "FAIL") == ts.at("overall").get<std::string>()},
                     {"calibration_count_matches", target == cal.at("n_causal_ref").get<std::size_t>()}};
  return out;
}

}  // namespace

Json make_table(const std::vector<std::string>& columns, Json rows, const std::string& x,
                const std::vector<std::string>& y, bool log_x) {
  return {{"columns", columns}, {"rows", std::move(rows)}, {"plot", {{"x", x}, {"y", y}, {"log_x", log_x}}}};
}

std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("KAPPA_FIXTURE_DIR"); env && *env) return env;
  return KAPPA_FIXTURE_DIR;
}

Json load_fixtures(const std::string& file) {
  const std::filesystem::path path = file.empty() ? fixture_dir() / "paper_values.json" : std::filesystem::path(file);
  const Json j = Json::parse(read_file(path));
  if (j.value("format", "") != "kappa.fixtures/1") throw InputError("fixture file " + path.string() + " has an unknown format");
  return j;
}

ExperimentOutput run_experiment(const RunConfig& config, const RunContext& context) {
  using Fn = ExperimentOutput (*)(const RunConfig&, const RunContext&);
  static const std::map<std::string, Fn> registry = {
      {"width_sweep", width_sweep},
      {"atp_validation", atp_validation},
      {"four_cell", four_cell_experiment},
      {"synthetic_recovery", synthetic_recovery_experiment},
      {"geometric_privilege", geometric_privilege_experiment},
      {"sparsity_dependence", sparsity_dependence_experiment},
      {"threshold_sensitivity", threshold_sensitivity_experiment},
      {"layer_profile", layer_profile_experiment},
      {"planted_rank", planted_rank_experiment},
      {"paper_fixtures", paper_fixtures_experiment},
  };
  const auto it = registry.find(config.experiment);
  if (it == registry.end()) {
    std::string list;
    for (const auto& n : registered_experiments()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown experiment '" + config.experiment + "' (registered: " + list + ")");
  }
  return it->second(config, context);
}

}  // namespace kappa
