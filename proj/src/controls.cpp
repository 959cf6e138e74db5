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

#include "kappa/controls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "kappa/calibration.hpp"
#include "kappa/errors.hpp"
#include "kappa/parallel.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {

namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

CellCount count_cell(const std::string& label, const GroundTruthModel& model, const SaeParams& sae,
                     const Matrix& activations, double epsilon_abs, const FourCellOptions& options) {
  CellCount c;
  c.label = label;
  c.m = sae.width();
  const AtpScores atp = atp_scores(model, sae, activations, options.attribution);
  c.n_causal = n_causal(as_span(atp.scores), epsilon_abs);
  c.n_repr = firing_frequency(sae, activations, options.alive_threshold).n_repr;
  c.utilisation = static_cast<double>(c.n_repr) / static_cast<double>(c.m);
  return c;
}

FourCellResult four_cell_impl(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                              double epsilon_abs, std::uint64_t seed, const SaeParams& shuffled,
                              const FourCellOptions& options) {
  FourCellResult out;
  out.epsilon_abs = epsilon_abs;
  out.cells.push_back(count_cell("REAL", model, sae, activations, epsilon_abs, options));
  out.cells.push_back(count_cell(to_string(ControlKind::RandomDecoder), model,
                                 make_control(sae, ControlKind::RandomDecoder, derive_seed(seed, 1)), activations,
                                 epsilon_abs, options));
  out.cells.push_back(
      count_cell(to_string(ControlKind::ShuffledDecoder), model, shuffled, activations, epsilon_abs, options));
  out.cells.push_back(count_cell(to_string(ControlKind::RandomEncoder), model,
                                 make_control(sae, ControlKind::RandomEncoder, derive_seed(seed, 3)), activations,
                                 epsilon_abs, options));
  return out;
}

double mean_abs_cosine_to_others(const Matrix& unit_rows, std::size_t i) {
  const auto m = unit_rows.rows();
  if (m < 2) return 0.0;
  const Vector cos = unit_rows * unit_rows.row(static_cast<Index>(i)).transpose();
  const double total = cos.cwiseAbs().sum() - std::abs(cos(static_cast<Index>(i)));
  return total / static_cast<double>(m - 1);
}

}  // namespace

const CellCount& FourCellResult::cell(const std::string& label) const {
  for (const auto& c : cells) {
    if (c.label == label) return c;
  }
  throw InputError("four-cell result has no cell '" + label + "'");
}

FourCellResult four_cell(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                         double epsilon_abs, std::uint64_t seed, const FourCellOptions& options) {
  return four_cell_impl(model, sae, activations, epsilon_abs, seed,
                        make_control(sae, ControlKind::ShuffledDecoder, derive_seed(seed, 2)), options);
}

FourCellResult four_cell(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                         double epsilon_abs, std::uint64_t seed, const std::vector<std::size_t>& permutation,
                         const FourCellOptions& options) {
  return four_cell_impl(model, sae, activations, epsilon_abs, seed, shuffle_decoder(sae, permutation), options);
}

RecoveryCell score_recovery(const Matrix& decoder, const std::vector<std::size_t>& selected,
                            const Matrix& ground_truth, double cosine_threshold) {
  if (decoder.cols() != ground_truth.cols()) throw InputError("score_recovery: dimension mismatch");
  RecoveryCell cell;
  cell.cosine_threshold = cosine_threshold;
  cell.n_selected = selected.size();
  const double cut = cosine_threshold - 1e-12;
  const auto n_gt = static_cast<std::size_t>(ground_truth.rows());
  if (selected.empty() || n_gt == 0) return cell;

  Matrix gt = ground_truth;
  for (Index r = 0; r < gt.rows(); ++r) {
    const double norm = gt.row(r).norm();
    if (norm > 0.0) gt.row(r) /= norm;
  }
  Matrix rows(static_cast<Index>(selected.size()), decoder.cols());
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (selected[s] >= static_cast<std::size_t>(decoder.rows())) throw InputError("score_recovery: index out of range");
    const RowVector r = decoder.row(static_cast<Index>(selected[s]));
    const double norm = r.norm();
    rows.row(static_cast<Index>(s)) = norm > 0.0 ? RowVector(r / norm) : r;
  }
  const Matrix cos = (rows * gt.transpose()).cwiseAbs();

  std::size_t precise = 0;
  for (Index s = 0; s < cos.rows(); ++s) {
    if (cos.row(s).maxCoeff() >= cut) ++precise;
  }
  cell.precision = static_cast<double>(precise) / static_cast<double>(selected.size());

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (Index s = 0; s < cos.rows(); ++s) {
    for (Index g = 0; g < cos.cols(); ++g) {
      if (cos(s, g) >= cut) pairs.emplace_back(cos(s, g), static_cast<std::size_t>(s), static_cast<std::size_t>(g));
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<bool> used_s(selected.size(), false), used_g(n_gt, false);
  for (const auto& [c, s, g] : pairs) {
    if (used_s[s] || used_g[g]) continue;
    used_s[s] = used_g[g] = true;
    cell.matched_pairs.push_back({selected[s], g, c});
  }
  cell.recall = static_cast<double>(cell.matched_pairs.size()) / static_cast<double>(n_gt);
  return cell;
}

Matrix causal_directions(const GroundTruthModel& model) {
  const auto& idx = model.dictionary.causal_index_set;
  Matrix out(static_cast<Index>(idx.size()), model.dictionary.directions.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Index>(i)) = model.dictionary.directions.row(static_cast<Index>(idx[i]));
  }
  return out;
}

std::vector<RecoveryCell> synthetic_recovery(const GroundTruthSpec& spec, const RecoveryOptions& options) {
  validate(spec);
  if (spec.n_causal < 1) throw ConfigError("GroundTruthSpec: n_causal >= 1");
  const GroundTruthModel model = generate_model(spec);
  const Matrix truth = causal_directions(model);

  struct Job {
    std::size_t width;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t w : options.widths) {
    for (std::uint64_t s : options.seeds) jobs.push_back({w, s});
  }
  std::vector<std::vector<RecoveryCell>> results(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t j) {
    const auto [width, seed] = jobs[j];
    const Matrix train = activation_matrix(sample_batch(model, options.n_train, derive_seed(seed, 1)));
    const Matrix eval = activation_matrix(sample_batch(model, options.n_eval, derive_seed(seed, 2)));
    SaeParams init = init_sae(spec.d, width, SaeArch::ReluL1, derive_seed(seed, 1000 + width), 1, options.lambda_l1);
    TrainConfig tc = options.train;
    tc.seed = derive_seed(seed, 2000 + width);
    const SaeParams sae = train_sae(std::move(init), train, tc).params;
    const AtpScores atp = atp_scores(model, sae, eval, options.attribution);
    const Calibration cal = calibrate_threshold(as_span(atp.scores), options.percentile);
    std::vector<std::size_t> selected;
    for (Index i = 0; i < atp.scores.size(); ++i) {
      if (atp.scores(i) >= cal.epsilon_abs) selected.push_back(static_cast<std::size_t>(i));
    }
    for (double thr : options.cosine_thresholds) {
      RecoveryCell cell = score_recovery(sae.w_dec, selected, truth, thr);
      cell.width = width;
      cell.seed = seed;
      results[j].push_back(std::move(cell));
    }
  });
  std::vector<RecoveryCell> out;
  for (auto& r : results) {
    for (auto& c : r) out.push_back(std::move(c));
  }
  return out;
}

Vector feature_magnitudes(const SaeParams& sae, const Matrix& activations) {
  if (activations.rows() < 1) throw InputError("feature_magnitudes: need at least one sample");
  return encode_batch(sae, activations).cwiseAbs().colwise().mean().transpose();
}

PrivilegeReport geometric_privilege(const SaeParams& sae, const Vector& magnitudes,
                                    const std::vector<std::size_t>& causal_set, std::uint64_t seed,
                                    std::size_t resamples) {
  const std::size_t m = sae.width();
  if (static_cast<std::size_t>(magnitudes.size()) != m) throw InputError("geometric_privilege: one magnitude per feature");
  if (causal_set.size() < 2) throw MatchingError("geometric_privilege: causal set needs at least 2 features");
  if (2 * causal_set.size() > m) {
    throw MatchingError("geometric_privilege: causal set of " + std::to_string(causal_set.size()) +
                        " cannot be matched disjointly among " + std::to_string(m) + " features");
  }
  std::vector<bool> taken(m, false);
  for (std::size_t i : causal_set) {
    if (i >= m) throw InputError("geometric_privilege: feature index out of range");
    if (taken[i]) throw InputError("geometric_privilege: duplicate feature in causal set");
    taken[i] = true;
  }

  PrivilegeReport report;
  report.causal_set = causal_set;
  report.matching =
      "greedy nearest mean |activation| among non-causal features, without replacement, in causal-set order";
  for (std::size_t c : causal_set) {
    std::size_t best = m;
    double best_gap = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (taken[j]) continue;
      const double gap = std::abs(magnitudes(static_cast<Index>(j)) - magnitudes(static_cast<Index>(c)));
      if (best == m || gap < best_gap) {
        best = j;
        best_gap = gap;
      }
    }
    taken[best] = true;
    report.control_set.push_back(best);
    const double scale = std::max(std::abs(magnitudes(static_cast<Index>(c))), 1e-300);
    report.max_relative_magnitude_gap = std::max(report.max_relative_magnitude_gap, best_gap / scale);
  }

  Matrix unit = sae.w_dec;
  for (Index r = 0; r < unit.rows(); ++r) {
    const double norm = unit.row(r).norm();
    if (norm > 0.0) unit.row(r) /= norm;
  }
  const std::size_t n = causal_set.size();
  std::vector<double> norm_diff(n), cos_diff(n);
  std::vector<double> cn(n), ck(n), tn(n), tk(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t c = causal_set[p], t = report.control_set[p];
    cn[p] = sae.w_dec.row(static_cast<Index>(c)).norm();
    tn[p] = sae.w_dec.row(static_cast<Index>(t)).norm();
    ck[p] = mean_abs_cosine_to_others(unit, c);
    tk[p] = mean_abs_cosine_to_others(unit, t);
    norm_diff[p] = cn[p] - tn[p];
    cos_diff[p] = ck[p] - tk[p];
  }
  report.causal = {mean(cn), mean(ck)};
  report.control = {mean(tn), mean(tk)};
  report.norm_gap = mean(norm_diff);
  report.cosine_gap = mean(cos_diff);

  if (resamples > 0) {
    Rng rng = make_rng(seed, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> norm_means(resamples), cos_means(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
      double sn = 0.0, sc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t p = pick(rng);
        sn += norm_diff[p];
        sc += cos_diff[p];
      }
      norm_means[b] = sn / static_cast<double>(n);
      cos_means[b] = sc / static_cast<double>(n);
    }
    report.norm_gap_se = stddev(norm_means);
    report.cosine_gap_se = stddev(cos_means);
  }
  return report;
}

SparsityReport sparsity_dependence(const std::vector<SparsityEntry>& entries) {
  if (entries.size() < 2) throw InputError("sparsity_dependence: need at least two SAEs");
  auto correlate = [](const std::vector<double>& freq, const std::vector<double>& member, const std::string& pool) {
    const double n_in = std::accumulate(member.begin(), member.end(), 0.0);
    if (n_in == 0.0 || n_in == static_cast<double>(member.size())) {
      throw StatisticsError("sparsity_dependence: " + pool + " has " + (n_in == 0.0 ? "no" : "only") +
                            " causal features; correlation undefined");
    }
    try {
      return spearman(freq, member);
    } catch (const StatisticsError&) {
      throw StatisticsError("sparsity_dependence: " + pool + " has constant firing frequency; correlation undefined");
    }
  };

  SparsityReport report;
  std::vector<std::string> order;
  std::vector<double> all_freq, all_member;
  for (const auto& e : entries) {
    if (e.firing_freq.size() != e.scores.size()) throw InputError("sparsity_dependence: firing/score size mismatch");
    if (std::find(order.begin(), order.end(), e.arch) == order.end()) order.push_back(e.arch);
    for (Index i = 0; i < e.scores.size(); ++i) {
      all_freq.push_back(e.firing_freq(i));
      all_member.push_back(e.scores(i) >= e.epsilon_abs ? 1.0 : 0.0);
    }
  }
  for (const auto& arch : order) {
    std::vector<double> freq, member;
    for (const auto& e : entries) {
      if (e.arch != arch) continue;
      for (Index i = 0; i < e.scores.size(); ++i) {
        freq.push_back(e.firing_freq(i));
        member.push_back(e.scores(i) >= e.epsilon_abs ? 1.0 : 0.0);
      }
    }
    report.per_arch.emplace_back(arch, correlate(freq, member, arch));
  }
  report.global = correlate(all_freq, all_member, "pooled set");
  return report;
}

}  // namespace kappa
