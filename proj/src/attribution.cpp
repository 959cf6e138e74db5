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

#include "kappa/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "kappa/errors.hpp"
#include "kappa/stats.hpp"

namespace kappa {

namespace {

Index argmax_lowest(const Vector& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

void check_shapes(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations, std::size_t probe) {
  if (probe >= model.probe_count()) throw InputError("attribution: probe out of range");
  if (static_cast<Index>(sae.dim()) != model.probe_dim(probe)) {
    throw InputError("attribution: SAE dimension " + std::to_string(sae.dim()) + " does not match probe dimension " +
                     std::to_string(model.probe_dim(probe)));
  }
  if (activations.cols() != model.probe_dim(probe)) {
    throw InputError("attribution: activation dimension mismatch");
  }
}

}  // namespace

std::string to_string(LossKind kind) {
  return kind == LossKind::KlAtPatched ? "KL_AT_PATCHED" : "CE_CLEAN_TARGET";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "KL_AT_PATCHED") return LossKind::KlAtPatched;
  if (name == "CE_CLEAN_TARGET") return LossKind::CeCleanTarget;
  throw ConfigError("unknown loss_kind '" + name + "' (expected KL_AT_PATCHED or CE_CLEAN_TARGET)");
}

LossFunction kl_loss(double eps_clamp) {
  const double log_floor = std::log(eps_clamp);
  return [log_floor](const Vector& clean_logits, const Vector& patched_logits) {
    const Vector log_pc = log_softmax(clean_logits);
    const Vector log_pp = log_softmax(patched_logits);
    const Vector pc = log_pc.array().exp();
    const Vector pp = log_pp.array().exp();
    LossEvaluation out;
    out.grad_logits = Vector::Zero(patched_logits.size());
    double unclamped_mass = 0.0;
    for (Index j = 0; j < pc.size(); ++j) {
      if (pc(j) == 0.0) continue;
      const double lq = std::max(log_pp(j), log_floor);
      out.value += pc(j) * (std::max(log_pc(j), log_floor) - lq);
      if (log_pp(j) >= log_floor) {
        out.grad_logits(j) -= pc(j);
        unclamped_mass += pc(j);
      }
    }
    // d/dy of -sum_j pc_j log pp_j over unclamped j is -pc + pp * (unclamped mass).
    out.grad_logits += unclamped_mass * pp;
    return out;
  };
}

LossFunction clean_target_cross_entropy(double eps_clamp) {
  const double log_floor = std::log(eps_clamp);
  return [log_floor](const Vector& clean_logits, const Vector& patched_logits) {
    const Index target = argmax_lowest(clean_logits);
    const Vector log_pp = log_softmax(patched_logits);
    LossEvaluation out;
    out.value = -std::max(log_pp(target), log_floor);
    out.grad_logits = Vector::Zero(patched_logits.size());
    if (log_pp(target) >= log_floor) {
      out.grad_logits = log_pp.array().exp();
      out.grad_logits(target) -= 1.0;
    }
    return out;
  };
}

AtpScores atp_scores(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                     const LossFunction& loss, GradientPoint point, std::size_t probe) {
  check_shapes(model, sae, activations, probe);
  const auto m = static_cast<Index>(sae.width());
  Vector total = Vector::Zero(m);
  for (Index s = 0; s < activations.rows(); ++s) {
    const Vector f = encode(sae, activations.row(s).transpose());
    const Vector clean_h = decode(sae, f);
    const Vector clean_logits = logits_from(model, probe, clean_h);

    Vector clean_grad_h;
    if (point == GradientPoint::Clean) {
      const LossEvaluation at_clean = loss(clean_logits, clean_logits);
      if (!std::isfinite(at_clean.value) || !at_clean.grad_logits.allFinite()) {
        throw NumericalError("attribution loss is not finite after clamping", static_cast<std::size_t>(s));
      }
      clean_grad_h = vjp_from(model, probe, clean_h, at_clean.grad_logits);
    }

    for (Index i = 0; i < m; ++i) {
      const double fi = f(i);
      if (fi == 0.0) continue;
      double dl_dfi = 0.0;
      if (point == GradientPoint::Clean) {
        dl_dfi = clean_grad_h.dot(sae.w_dec.row(i));
      } else {
        const Vector patched_h = clean_h - fi * sae.w_dec.row(i).transpose();
        const Vector patched_logits = logits_from(model, probe, patched_h);
        const LossEvaluation ev = loss(clean_logits, patched_logits);
        if (!std::isfinite(ev.value) || !ev.grad_logits.allFinite()) {
          throw NumericalError("attribution loss is not finite after clamping", static_cast<std::size_t>(s));
        }
        dl_dfi = vjp_from(model, probe, patched_h, ev.grad_logits).dot(sae.w_dec.row(i));
      }
      total(i) += std::abs(dl_dfi * fi);
    }
  }
  AtpScores out;
  out.n_samples = static_cast<std::size_t>(activations.rows());
  out.scores = activations.rows() > 0 ? Vector(total / static_cast<double>(activations.rows())) : total;
  return out;
}

AtpScores atp_scores(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                     const AttributionConfig& config) {
  AtpScores out = config.loss_kind == LossKind::KlAtPatched
                      ? atp_scores(model, sae, activations, kl_loss(config.eps_clamp), GradientPoint::Patched, config.probe)
                      : atp_scores(model, sae, activations, clean_target_cross_entropy(config.eps_clamp),
                                   GradientPoint::Clean, config.probe);
  out.loss_kind = config.loss_kind;
  out.eps_clamp = config.eps_clamp;
  return out;
}

ExactPatchResult exact_patch(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                             const std::vector<std::size_t>& feature_subset, const LossFunction& loss,
                             std::size_t probe) {
  check_shapes(model, sae, activations, probe);
  for (std::size_t i : feature_subset) {
    if (i >= sae.width()) throw InputError("exact_patch: feature index " + std::to_string(i) + " out of range");
  }
  ExactPatchResult out;
  out.features = feature_subset;
  out.effects = Vector::Zero(static_cast<Index>(feature_subset.size()));
  out.n_samples = static_cast<std::size_t>(activations.rows());
  for (Index s = 0; s < activations.rows(); ++s) {
    const Vector f = encode(sae, activations.row(s).transpose());
    const Vector clean_h = decode(sae, f);
    const Vector clean_logits = logits_from(model, probe, clean_h);
    const double base = loss(clean_logits, clean_logits).value;
    for (std::size_t t = 0; t < feature_subset.size(); ++t) {
      const auto i = static_cast<Index>(feature_subset[t]);
      if (f(i) == 0.0) continue;
      const Vector patched_h = clean_h - f(i) * sae.w_dec.row(i).transpose();
      const double value = loss(clean_logits, logits_from(model, probe, patched_h)).value;
      if (!std::isfinite(value) || !std::isfinite(base)) {
        throw NumericalError("exact patching loss is not finite after clamping", static_cast<std::size_t>(s));
      }
      out.effects(static_cast<Index>(t)) += std::abs(value - base);
    }
  }
  if (activations.rows() > 0) out.effects /= static_cast<double>(activations.rows());
  return out;
}

ExactPatchResult exact_patch(const GroundTruthModel& model, const SaeParams& sae, const Matrix& activations,
                             const std::vector<std::size_t>& feature_subset, const AttributionConfig& config) {
  return exact_patch(model, sae, activations, feature_subset, kl_loss(config.eps_clamp), config.probe);
}

ValidationReport validate_atp(const AtpScores& atp, const ExactPatchResult& exact, double q) {
  const std::size_t n = exact.features.size();
  if (n < 3) throw StatisticsError("validate_atp: need at least 3 features, got " + std::to_string(n));
  std::vector<double> a(n), e(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (exact.features[t] >= static_cast<std::size_t>(atp.scores.size())) {
      throw InputError("validate_atp: feature index outside the AtP score vector");
    }
    a[t] = atp.scores(static_cast<Index>(exact.features[t]));
    e[t] = exact.effects(static_cast<Index>(t));
  }
  ValidationReport out;
  out.q = q;
  out.n_features = n;
  out.spearman_global = spearman(a, e);

  const std::size_t n_top = top_fraction_count(n, 100.0 - q);
  if (n_top < 3) throw StatisticsError("validate_atp: top-q subset has fewer than 3 features");
  const auto top = top_indices(a, n_top);
  std::vector<double> ta, te;
  for (std::size_t t : top) {
    ta.push_back(a[t]);
    te.push_back(e[t]);
  }
  out.n_top_q = n_top;
  out.spearman_top_q = spearman(ta, te);

  const std::size_t n_agree = top_fraction_count(n, 98.0);
  out.threshold_agreement = jaccard(top_indices(a, n_agree), top_indices(e, n_agree));
  return out;
}

}  // namespace kappa
