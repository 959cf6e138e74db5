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

#include "kappa/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "kappa/errors.hpp"
#include "kappa/parallel.hpp"
#include "kappa/random.hpp"
#include "kappa/spectral.hpp"

namespace kappa {

namespace {

double score_participation(const Vector& scores) {
  if (scores.size() == 0 || !(scores.maxCoeff() > 0.0)) return 0.0;
  return participation_ratio(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

WidthRun train_width(const GroundTruthModel& model, const SweepConfig& config, const SweepData& data,
                     std::size_t m, std::uint64_t seed) {
  WidthRun run;
  run.m = m;
  SaeParams init = init_sae(static_cast<std::size_t>(data.train.cols()), m, config.arch, derive_seed(seed, 1000 + m),
                            config.k, config.lambda_l1);
  TrainConfig train = config.train;
  train.seed = derive_seed(seed, 2000 + m);
  train.alive_threshold = config.alive_threshold;
  TrainResult trained = train_sae(std::move(init), data.train, train);
  run.sae = std::move(trained.params);
  run.metrics = std::move(trained.metrics);
  run.learning_curve = std::move(trained.learning_curve);
  run.atp = atp_scores(model, run.sae, data.eval, config.attribution);
  run.firing = firing_frequency(run.sae, data.eval, config.alive_threshold);
  return run;
}

std::vector<std::string> sweep_violations(const SweepConfig& c) {
  std::vector<std::string> out;
  if (c.widths.empty()) out.emplace_back("widths: at least one width");
  for (std::size_t i = 0; i < c.widths.size(); ++i) {
    if (c.widths[i] < 1) out.emplace_back("widths: every width >= 1");
    if (i > 0 && c.widths[i] <= c.widths[i - 1]) {
      out.emplace_back("widths: strictly ascending (position " + std::to_string(i) + ")");
      break;
    }
  }
  if (std::find(c.widths.begin(), c.widths.end(), c.m_ref) == c.widths.end()) {
    out.emplace_back("m_ref: must be one of widths (m_ref=" + std::to_string(c.m_ref) + ")");
  }
  if (!(c.percentile > 0.0 && c.percentile < 100.0)) out.emplace_back("percentile: in (0, 100)");
  if (c.arch == SaeArch::TopK) {
    if (c.k < 1) out.emplace_back("k: >= 1");
    if (!c.widths.empty() && c.k > c.widths.front()) out.emplace_back("k: <= smallest width");
  }
  if (!(c.lambda_l1 >= 0.0)) out.emplace_back("lambda_l1: >= 0");
  if (c.seeds.empty()) out.emplace_back("seeds: at least one seed");
  if (!(c.alive_threshold >= 0.0 && c.alive_threshold < 1.0)) out.emplace_back("alive_threshold: in [0, 1)");
  if (c.n_train < 2) out.emplace_back("n_train: >= 2");
  if (c.n_eval < 1) out.emplace_back("n_eval: >= 1");
  if (c.train.epochs < 1) out.emplace_back("train.epochs: >= 1");
  if (c.train.batch_size < 1) out.emplace_back("train.batch_size: >= 1");
  if (!(c.train.lr > 0.0)) out.emplace_back("train.lr: > 0");
  if (!(c.train.momentum >= 0.0 && c.train.momentum < 1.0)) out.emplace_back("train.momentum: in [0, 1)");
  if (!(c.train.holdout_fraction >= 0.0 && c.train.holdout_fraction < 1.0)) {
    out.emplace_back("train.holdout_fraction: in [0, 1)");
  }
  if (!(c.attribution.eps_clamp > 0.0)) out.emplace_back("attribution.eps_clamp: > 0");
  return out;
}

void validate(const SweepConfig& config) {
  const auto v = sweep_violations(config);
  if (!v.empty()) throw ConfigError("SweepConfig: " + v.front());
}

std::vector<WidthScores> SweepResult::width_scores() const {
  std::vector<WidthScores> out;
  out.reserve(runs.size());
  for (const auto& r : runs) {
    out.push_back({static_cast<double>(r.m), std::vector<double>(r.atp.scores.begin(), r.atp.scores.end())});
  }
  return out;
}

std::vector<CurvePoint> SweepResult::causal_curve() const {
  std::vector<CurvePoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({static_cast<double>(p.m), static_cast<double>(p.n_causal)});
  return out;
}

SweepData sweep_data(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed) {
  if (config.attribution.probe >= model.probe_count()) {
    throw ConfigError("attribution.probe: model exposes " + std::to_string(model.probe_count()) + " probe points");
  }
  SweepData data;
  const std::size_t probe = config.attribution.probe;
  data.train = probe_activations(model, probe, activation_matrix(sample_batch(model, config.n_train, derive_seed(seed, 1))));
  data.eval = probe_activations(model, probe, activation_matrix(sample_batch(model, config.n_eval, derive_seed(seed, 2))));
  return data;
}

SweepResult run_width_sweep(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed,
                            const SweepHooks& hooks) {
  validate(config);
  const SweepData data = sweep_data(model, config, seed);

  const std::size_t n = config.widths.size();
  std::vector<std::optional<WidthRun>> runs(n);
  std::vector<std::exception_ptr> failures(n);
  parallel_for(n, hooks.jobs, [&](std::size_t i) {
    try {
      runs[i] = train_width(model, config, data, config.widths[i], seed);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  if (hooks.on_width_trained) {
    for (const auto& r : runs) {
      if (r) hooks.on_width_trained(*r);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      throw SweepError(e.what(), config.widths[i]);
    }
  }

  SweepResult result;
  result.seed = seed;
  const auto ref_pos = static_cast<std::size_t>(
      std::find(config.widths.begin(), config.widths.end(), config.m_ref) - config.widths.begin());
  result.calibration = calibrate_threshold(as_span(runs[ref_pos]->atp.scores), config.percentile);
  result.calibration.reference_width = config.m_ref;
  const double eps = result.calibration.epsilon_abs;

  for (std::size_t i = 0; i < n; ++i) {
    const WidthRun& run = *runs[i];
    WidthPoint p;
    p.m = run.m;
    p.n_causal = n_causal(as_span(run.atp.scores), eps);
    p.n_repr = run.firing.n_repr;
    p.epsilon_abs = eps;
    p.kappa_pr = score_participation(run.atp.scores);
    p.mean_l0 = run.firing.mean_l0;
    p.mse = run.metrics.mse;
    result.points.push_back(p);
    result.runs.push_back(std::move(*runs[i]));
  }
  return result;
}

WedgeReport wedge_ratio(std::span<const WidthPoint> points, std::size_t m_ref) {
  if (points.size() < 2) throw InputError("wedge_ratio: need at least two width points");
  const auto ref = std::find_if(points.begin(), points.end(), [m_ref](const WidthPoint& p) { return p.m == m_ref; });
  if (ref == points.end()) throw InputError("wedge_ratio: m_ref " + std::to_string(m_ref) + " not among the points");
  const auto max = std::max_element(points.begin(), points.end(),
                                    [](const WidthPoint& a, const WidthPoint& b) { return a.m < b.m; });
  if (ref->n_causal == 0) throw UndefinedError("wedge_ratio: N_causal at m_ref is 0");
  WedgeReport w;
  w.m_ref = ref->m;
  w.m_max = max->m;
  w.n_causal_ref = ref->n_causal;
  w.n_causal_max = max->n_causal;
  w.causal_ratio = static_cast<double>(max->n_causal) / static_cast<double>(ref->n_causal);
  w.n_repr_ref = ref->n_repr;
  w.n_repr_max = max->n_repr;
  w.repr_ratio = ref->n_repr == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(max->n_repr) / static_cast<double>(ref->n_repr);
  w.width_ratio = static_cast<double>(max->m) / static_cast<double>(ref->m);
  return w;
}

SensitivityReport sensitivity_verdict(std::span<const double> multipliers, std::span<const double> ratios,
                                      double ratio_limit, std::size_t min_pass) {
  if (multipliers.size() != ratios.size()) throw InputError("sensitivity_verdict: one ratio per multiplier");
  SensitivityReport report;
  report.ratio_limit = ratio_limit;
  report.min_pass = min_pass;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    SensitivityRow row;
    row.multiplier = multipliers[i];
    row.ratio = ratios[i];
    row.pass = std::isfinite(ratios[i]) && ratios[i] < ratio_limit;
    if (row.pass) ++report.n_pass;
    report.rows.push_back(row);
  }
  report.overall_pass = report.n_pass >= min_pass;
  return report;
}

SensitivityReport threshold_sensitivity(const WidthScores& ref, const WidthScores& max, double epsilon_abs,
                                        std::span<const double> multipliers, double ratio_limit,
                                        std::size_t min_pass) {
  std::vector<double> ratios;
  std::vector<SensitivityRow> rows;
  for (double mult : multipliers) {
    SensitivityRow row;
    row.multiplier = mult;
    row.epsilon_abs = epsilon_abs * mult;
    row.n_ref = n_causal(ref.scores, row.epsilon_abs);
    row.n_max = n_causal(max.scores, row.epsilon_abs);
    row.ratio = row.n_ref == 0 ? std::numeric_limits<double>::infinity()
                               : static_cast<double>(row.n_max) / static_cast<double>(row.n_ref);
    ratios.push_back(row.ratio);
    rows.push_back(row);
  }
  SensitivityReport report = sensitivity_verdict(multipliers, ratios, ratio_limit, min_pass);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].pass = report.rows[i].pass;
  }
  report.rows = std::move(rows);
  return report;
}

std::vector<LayerPoint> layer_profile(const GroundTruthModel& model, const SweepConfig& config, std::uint64_t seed,
                                      std::size_t jobs) {
  validate(config);
  if (model.probe_count() < 2) {
    throw InputError("layer_profile: model exposes " + std::to_string(model.probe_count()) +
                     " probe point(s), need at least 2");
  }
  std::vector<LayerPoint> out(model.probe_count());
  parallel_for(model.probe_count(), jobs, [&](std::size_t probe) {
    SweepConfig c = config;
    c.attribution.probe = probe;
    const SweepData data = sweep_data(model, c, seed);
    const WidthRun run = train_width(model, c, data, c.m_ref, derive_seed(seed, 3000 + probe));
    const Calibration cal = calibrate_threshold(as_span(run.atp.scores), c.percentile);
    LayerPoint p;
    p.probe = probe;
    p.epsilon_abs = cal.epsilon_abs;
    p.n_causal = cal.realized_count;
    p.n_repr = run.firing.n_repr;
    p.kappa_pr = score_participation(run.atp.scores);
    out[probe] = p;
  });
  return out;
}

}  // namespace kappa
