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

#include "kappa/synthetic_model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "kappa/errors.hpp"
#include "kappa/random.hpp"

namespace kappa {

namespace {

void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw InputError(std::string(what) + ": input contains non-finite values");
  }
}

void require_probe(const GroundTruthModel& model, std::size_t probe, Index dim) {
  if (probe >= model.probe_count()) {
    throw InputError("probe " + std::to_string(probe) + " out of range (model has " +
                     std::to_string(model.probe_count()) + " probe points)");
  }
  if (dim != model.probe_dim(probe)) {
    throw InputError("probe " + std::to_string(probe) + " expects dimension " +
                     std::to_string(model.probe_dim(probe)) + ", got " + std::to_string(dim));
  }
}

// Post-activation values of head layers probe..end, given the probe input.
std::vector<Vector> run_head(const GroundTruthModel& model, std::size_t probe, const Vector& x) {
  std::vector<Vector> acts;
  acts.reserve(model.head.size() - probe);
  Vector a = probe == 0 ? Vector(model.causal_projector * x) : x;
  for (std::size_t j = probe; j < model.head.size(); ++j) {
    const HeadLayer& layer = model.head[j];
    a = layer.weight * a + layer.bias;
    if (layer.nonlinear) {
      a = a.array().tanh().matrix();
    }
    acts.push_back(a);
  }
  return acts;
}

}  // namespace

Index GroundTruthModel::probe_dim(std::size_t probe) const {
  if (probe == 0) {
    return static_cast<Index>(spec.d);
  }
  return head.at(probe - 1).weight.rows();
}

std::vector<std::string> spec_violations(const GroundTruthSpec& spec) {
  std::vector<std::string> out;
  if (spec.d < 1) out.emplace_back("d >= 1");
  if (spec.n_features < 1) out.emplace_back("n_features >= 1");
  if (spec.n_causal < 1) out.emplace_back("n_causal >= 1");
  if (spec.n_causal > spec.n_features) {
    out.emplace_back("n_causal <= n_features (n_causal=" + std::to_string(spec.n_causal) +
                     ", n_features=" + std::to_string(spec.n_features) + ")");
  }
  if (spec.n_causal > spec.d) {
    out.emplace_back("n_causal <= d (n_causal=" + std::to_string(spec.n_causal) + ", d=" + std::to_string(spec.d) + ")");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) out.emplace_back("noise_sigma >= 0");
  if (spec.active_per_sample < 1) out.emplace_back("active_per_sample >= 1");
  if (spec.active_per_sample > spec.n_features) out.emplace_back("active_per_sample <= n_features");
  if (spec.vocab_size < 1) out.emplace_back("vocab_size >= 1");
  if (spec.vocab_size < spec.d && !spec.allow_small_vocab) {
    out.emplace_back("vocab_size >= d unless allow_small_vocab (vocab_size=" + std::to_string(spec.vocab_size) +
                     ", d=" + std::to_string(spec.d) + ")");
  }
  if (spec.depth < 1) out.emplace_back("depth >= 1");
  if (!(spec.logit_scale > 0.0) || !std::isfinite(spec.logit_scale)) out.emplace_back("logit_scale > 0");
  if (!(spec.causal_rate_scale > 0.0) || !std::isfinite(spec.causal_rate_scale)) {
    out.emplace_back("causal_rate_scale > 0");
  } else if (spec.n_features > 0 &&
             spec.causal_rate_scale * static_cast<double>(spec.active_per_sample) > static_cast<double>(spec.n_features)) {
    out.emplace_back("causal_rate_scale * active_per_sample <= n_features (causal firing probability above 1)");
  }
  if (!(spec.causal_coef_scale > 0.0) || !std::isfinite(spec.causal_coef_scale)) out.emplace_back("causal_coef_scale > 0");
  if (spec.inert_complement && spec.n_causal == spec.d && spec.n_features > spec.n_causal) {
    out.emplace_back("inert_complement requires n_causal < d when n_features > n_causal");
  }
  return out;
}

void validate(const GroundTruthSpec& spec) {
  const auto violations = spec_violations(spec);
  if (!violations.empty()) {
    throw ConfigError("GroundTruthSpec: violated bound: " + violations.front());
  }
}

GroundTruthModel generate_model(const GroundTruthSpec& spec) {
  validate(spec);
  GroundTruthModel model;
  model.spec = spec;

  const auto d = static_cast<Index>(spec.d);
  const auto n_causal = static_cast<Index>(spec.n_causal);
  const auto n_features = static_cast<Index>(spec.n_features);

  Rng dict_rng = make_rng(spec.seed, 0);
  Matrix causal_rows = random_unit_rows(n_causal, d, dict_rng);
  model.causal_projector = orthonormalize_rows(causal_rows);

  Matrix directions(n_features, d);
  directions.topRows(n_causal) = causal_rows;
  if (n_features > n_causal) {
    const Index rest = n_features - n_causal;
    if (spec.inert_complement) {
      const Matrix complement = orthogonal_complement(model.causal_projector);
      directions.bottomRows(rest) = random_unit_rows(rest, complement.rows(), dict_rng) * complement;
    } else {
      directions.bottomRows(rest) = random_unit_rows(rest, d, dict_rng);
    }
  }
  model.dictionary.directions = std::move(directions);
  model.dictionary.causal_index_set.resize(spec.n_causal);
  for (std::size_t i = 0; i < spec.n_causal; ++i) {
    model.dictionary.causal_index_set[i] = i;
  }

  Rng head_rng = make_rng(spec.seed, 1);
  const Index hidden = spec.hidden_width == 0 ? d : static_cast<Index>(spec.hidden_width);
  Index in_dim = n_causal;
  for (std::size_t layer = 0; layer < spec.depth; ++layer) {
    const bool last = layer + 1 == spec.depth;
    const Index out_dim = last ? static_cast<Index>(spec.vocab_size) : hidden;
    const double gain = last ? spec.logit_scale : 1.0;
    HeadLayer hl;
    hl.weight = gaussian_matrix(out_dim, in_dim, head_rng, gain / std::sqrt(static_cast<double>(in_dim)));
    hl.bias = gaussian_matrix(out_dim, 1, head_rng, 0.1);
    hl.nonlinear = !last;
    model.head.push_back(std::move(hl));
    in_dim = out_dim;
  }
  return model;
}

std::vector<ActivationSample> sample_batch(const GroundTruthModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) {
    throw InputError("sample_batch: n must be >= 1");
  }
  const auto& spec = model.spec;
  const double p_active = static_cast<double>(spec.active_per_sample) / static_cast<double>(spec.n_features);
  const double p_causal = p_active * spec.causal_rate_scale;
  const auto d = static_cast<Index>(spec.d);

  std::vector<ActivationSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    ActivationSample& s = out[i];
    s.h = Vector::Zero(d);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
      const bool causal = j < spec.n_causal;
      if (unit(rng) < (causal ? p_causal : p_active)) {
        const double c = std::abs(normal(rng)) * (causal ? spec.causal_coef_scale : 1.0);
        s.active_set.push_back(j);
        s.coefficients.push_back(c);
        s.h += c * model.dictionary.directions.row(static_cast<Index>(j)).transpose();
      }
    }
    if (spec.noise_sigma > 0.0) {
      for (Index c = 0; c < d; ++c) {
        s.h(c) += spec.noise_sigma * normal(rng);
      }
    }
  }
  return out;
}

Matrix activation_matrix(const std::vector<ActivationSample>& samples) {
  if (samples.empty()) {
    return Matrix(0, 0);
  }
  Matrix out(static_cast<Index>(samples.size()), samples.front().h.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.row(static_cast<Index>(i)) = samples[i].h.transpose();
  }
  return out;
}

Vector log_softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return (logits.array() - lse).matrix();
}

Vector softmax(const Vector& logits) { return log_softmax(logits).array().exp().matrix(); }

Vector logits_from(const GroundTruthModel& model, std::size_t probe, const Vector& x) {
  require_probe(model, probe, x.size());
  require_finite(x, "forward");
  return run_head(model, probe, x).back();
}

ForwardResult forward_from(const GroundTruthModel& model, std::size_t probe, const Vector& x) {
  ForwardResult r;
  r.logits = logits_from(model, probe, x);
  r.probabilities = softmax(r.logits);
  return r;
}

ForwardResult forward(const GroundTruthModel& model, const Vector& h) { return forward_from(model, 0, h); }

Matrix jacobian_from(const GroundTruthModel& model, std::size_t probe, const Vector& x) {
  require_probe(model, probe, x.size());
  require_finite(x, "jacobian");
  const auto acts = run_head(model, probe, x);
  Matrix j = Matrix::Identity(model.head.back().weight.rows(), model.head.back().weight.rows());
  for (std::size_t idx = model.head.size(); idx-- > probe;) {
    const HeadLayer& layer = model.head[idx];
    if (layer.nonlinear) {
      const Vector& a = acts[idx - probe];
      j = j * (1.0 - a.array().square()).matrix().asDiagonal();
    }
    j = j * layer.weight;
  }
  if (probe == 0) {
    j = j * model.causal_projector;
  }
  return j;
}

Matrix jacobian(const GroundTruthModel& model, const Vector& h) { return jacobian_from(model, 0, h); }

Vector vjp_from(const GroundTruthModel& model, std::size_t probe, const Vector& x, const Vector& grad_logits) {
  require_probe(model, probe, x.size());
  const auto acts = run_head(model, probe, x);
  Vector g = grad_logits;
  for (std::size_t idx = model.head.size(); idx-- > probe;) {
    const HeadLayer& layer = model.head[idx];
    if (layer.nonlinear) {
      const Vector& a = acts[idx - probe];
      g = (g.array() * (1.0 - a.array().square())).matrix();
    }
    g = layer.weight.transpose() * g;
  }
  if (probe == 0) {
    g = model.causal_projector.transpose() * g;
  }
  return g;
}

Vector probe_activation(const GroundTruthModel& model, std::size_t probe, const Vector& h) {
  require_probe(model, 0, h.size());
  if (probe >= model.probe_count()) {
    throw InputError("probe " + std::to_string(probe) + " out of range");
  }
  Vector a = h;
  if (probe == 0) {
    return a;
  }
  a = model.causal_projector * h;
  for (std::size_t j = 0; j < probe; ++j) {
    const HeadLayer& layer = model.head[j];
    a = layer.weight * a + layer.bias;
    if (layer.nonlinear) {
      a = a.array().tanh().matrix();
    }
  }
  return a;
}

Matrix probe_activations(const GroundTruthModel& model, std::size_t probe, const Matrix& inputs) {
  Matrix out(inputs.rows(), model.probe_dim(probe));
  for (Index r = 0; r < inputs.rows(); ++r) {
    out.row(r) = probe_activation(model, probe, inputs.row(r).transpose()).transpose();
  }
  return out;
}

Matrix sigma_true_from(const GroundTruthModel& model, std::size_t probe, const Matrix& inputs) {
  if (inputs.rows() == 0) {
    throw InputError("sigma_true: empty sample list");
  }
  const Index dim = model.probe_dim(probe);
  Matrix sigma = Matrix::Zero(dim, dim);
  for (Index r = 0; r < inputs.rows(); ++r) {
    const Matrix j = jacobian_from(model, probe, inputs.row(r).transpose());
    sigma.noalias() += j.transpose() * j;
  }
  sigma /= static_cast<double>(inputs.rows());
  // Symmetrize away accumulated rounding asymmetry.
  return 0.5 * (sigma + sigma.transpose());
}

Matrix sigma_true(const GroundTruthModel& model, const std::vector<ActivationSample>& samples) {
  if (samples.empty()) {
    throw InputError("sigma_true: empty sample list");
  }
  return sigma_true_from(model, 0, activation_matrix(samples));
}

Matrix inert_basis(const GroundTruthModel& model) { return orthogonal_complement(model.causal_projector); }

}  // namespace kappa
