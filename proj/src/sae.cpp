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

#include "kappa/sae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kappa/errors.hpp"
#include "kappa/random.hpp"
#include "kappa/stats.hpp"

namespace kappa {

namespace {

constexpr Index kChunkRows = 256;

void check_dims(const SaeParams& sae, Index d) {
  if (static_cast<Index>(sae.dim()) != d) {
    throw InputError("SAE expects dimension " + std::to_string(sae.dim()) + ", got " + std::to_string(d));
  }
}

// Applies the architecture's activation to one row of pre-activations in place.
// Entries that stay live get mask 1.
using RowRef = Eigen::Ref<RowVector, 0, Eigen::InnerStride<>>;

void activate_row(const SaeParams& sae, RowRef pre, RowRef mask) {
  const Index m = pre.size();
  switch (sae.arch) {
    case SaeArch::ReluL1:
      for (Index i = 0; i < m; ++i) {
        const bool on = pre(i) > 0.0;
        mask(i) = on ? 1.0 : 0.0;
        if (!on) pre(i) = 0.0;
      }
      break;
    case SaeArch::JumpRelu:
      for (Index i = 0; i < m; ++i) {
        const bool on = pre(i) > sae.theta(i);
        mask(i) = on ? 1.0 : 0.0;
        if (!on) pre(i) = 0.0;
      }
      break;
    case SaeArch::TopK: {
      const Vector values = pre.transpose();
      const auto keep = top_k_indices(values, sae.k);
      pre.setZero();
      mask.setZero();
      for (Index i : keep) {
        pre(i) = values(i);
        mask(i) = 1.0;
      }
      break;
    }
  }
}

Matrix pre_activation_batch(const SaeParams& sae, const Matrix& x) {
  Matrix centered = x.rowwise() - sae.b_dec.transpose();
  Matrix pre = centered * sae.w_enc.transpose();
  pre.rowwise() += sae.b_enc.transpose();
  return pre;
}

void renormalize_decoder(SaeParams& sae) {
  for (Index i = 0; i < sae.w_dec.rows(); ++i) {
    const double norm = sae.w_dec.row(i).norm();
    if (norm > 0.0) sae.w_dec.row(i) /= norm;
  }
}

Matrix gather_rows(const Matrix& data, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Index>(end - begin), data.cols());
  for (std::size_t r = begin; r < end; ++r) {
    out.row(static_cast<Index>(r - begin)) = data.row(static_cast<Index>(idx[r]));
  }
  return out;
}

double schedule_factor(std::size_t epoch, std::size_t epochs) {
  // Step schedule: full rate, then x0.3 at 60% and again at 80% of training.
  const double progress = static_cast<double>(epoch) / static_cast<double>(epochs);
  if (progress >= 0.8) return 0.09;
  if (progress >= 0.6) return 0.3;
  return 1.0;
}

void calibrate_jump_thresholds(SaeParams& sae, const Matrix& data, double percentile) {
  const Index m = static_cast<Index>(sae.width());
  std::vector<std::vector<double>> positives(static_cast<std::size_t>(m));
  for (Index start = 0; start < data.rows(); start += kChunkRows) {
    const Index rows = std::min(kChunkRows, data.rows() - start);
    const Matrix pre = pre_activation_batch(sae, data.middleRows(start, rows));
    for (Index r = 0; r < rows; ++r) {
      for (Index i = 0; i < m; ++i) {
        if (pre(r, i) > 0.0) positives[static_cast<std::size_t>(i)].push_back(pre(r, i));
      }
    }
  }
  for (Index i = 0; i < m; ++i) {
    auto& v = positives[static_cast<std::size_t>(i)];
    sae.theta(i) = v.empty() ? 0.0 : percentile_linear(v, percentile);
  }
}

}  // namespace

std::string to_string(SaeArch arch) {
  switch (arch) {
    case SaeArch::ReluL1: return "RELU_L1";
    case SaeArch::TopK: return "TOPK";
    case SaeArch::JumpRelu: return "JUMPRELU";
  }
  return "?";
}

SaeArch parse_arch(const std::string& name) {
  if (name == "RELU_L1") return SaeArch::ReluL1;
  if (name == "TOPK") return SaeArch::TopK;
  if (name == "JUMPRELU") return SaeArch::JumpRelu;
  throw ConfigError("unknown SAE architecture '" + name + "' (expected RELU_L1, TOPK or JUMPRELU)");
}

std::string to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::RandomDecoder: return "RANDOM_DEC";
    case ControlKind::ShuffledDecoder: return "SHUFFLED_DEC";
    case ControlKind::RandomEncoder: return "RANDOM_ENC";
  }
  return "?";
}

SaeParams init_sae(std::size_t d, std::size_t m, SaeArch arch, std::uint64_t seed, std::size_t k, double lambda_l1) {
  if (m < 1) throw ConfigError("SaeParams: m >= 1 (got m=" + std::to_string(m) + ")");
  if (d < 1) throw ConfigError("SaeParams: d >= 1");
  if (arch == SaeArch::TopK && (k < 1 || k > m)) {
    throw ConfigError("SaeParams: TOPK requires 1 <= k <= m (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  if (!(lambda_l1 >= 0.0)) throw ConfigError("SaeParams: lambda_l1 >= 0");
  Rng rng = make_rng(seed, 0);
  SaeParams sae;
  const auto md = static_cast<Index>(m);
  const auto dd = static_cast<Index>(d);
  sae.w_dec = random_unit_rows(md, dd, rng);
  sae.w_enc = sae.w_dec;
  if (arch != SaeArch::TopK) {
    // Unit initial gain with about half the latents firing.
    sae.w_enc *= std::min(1.0, 2.0 * static_cast<double>(d) / static_cast<double>(m));
  }
  sae.b_enc = Vector::Zero(md);
  sae.b_dec = Vector::Zero(dd);
  sae.arch = arch;
  sae.k = arch == SaeArch::TopK ? k : 0;
  sae.theta = Vector::Zero(md);
  sae.lambda_l1 = arch == SaeArch::TopK ? 0.0 : lambda_l1;
  return sae;
}

std::vector<Index> top_k_indices(const Vector& values, std::size_t k) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  k = std::min<std::size_t>(k, idx.size());
  auto before = [&values](Index a, Index b) {
    return values(a) > values(b) || (values(a) == values(b) && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector pre_activations(const SaeParams& sae, const Vector& h) {
  check_dims(sae, h.size());
  return sae.w_enc * (h - sae.b_dec) + sae.b_enc;
}

Vector encode(const SaeParams& sae, const Vector& h) {
  if (!h.allFinite()) throw InputError("encode: non-finite activation");
  RowVector pre = pre_activations(sae, h).transpose();
  RowVector mask(pre.size());
  activate_row(sae, pre, mask);
  return pre.transpose();
}

Vector decode(const SaeParams& sae, const Vector& f) {
  if (static_cast<std::size_t>(f.size()) != sae.width()) {
    throw InputError("decode: code has " + std::to_string(f.size()) + " entries, SAE width is " +
                     std::to_string(sae.width()));
  }
  return sae.w_dec.transpose() * f + sae.b_dec;
}

Matrix encode_batch(const SaeParams& sae, const Matrix& x) {
  check_dims(sae, x.cols());
  Matrix pre = pre_activation_batch(sae, x);
  Matrix mask(pre.rows(), pre.cols());
  for (Index r = 0; r < pre.rows(); ++r) {
    activate_row(sae, pre.row(r), mask.row(r));
  }
  return pre;
}

Matrix decode_batch(const SaeParams& sae, const Matrix& f) {
  Matrix out = f * sae.w_dec;
  out.rowwise() += sae.b_dec.transpose();
  return out;
}

std::size_t count_represented(const Vector& firing_freq, double alive_threshold) {
  return static_cast<std::size_t>((firing_freq.array() > alive_threshold).count());
}

SaeMetrics evaluate_sae(const SaeParams& sae, const Matrix& data, double alive_threshold) {
  check_dims(sae, data.cols());
  SaeMetrics out;
  out.alive_threshold = alive_threshold;
  const Index n = data.rows();
  const auto m = static_cast<Index>(sae.width());
  Vector fired = Vector::Zero(m);
  double sq_err = 0.0;
  double l0 = 0.0;
  for (Index start = 0; start < n; start += kChunkRows) {
    const Index rows = std::min(kChunkRows, n - start);
    const Matrix x = data.middleRows(start, rows);
    const Matrix f = encode_batch(sae, x);
    const Matrix recon = decode_batch(sae, f);
    sq_err += (recon - x).squaredNorm();
    for (Index r = 0; r < rows; ++r) {
      for (Index i = 0; i < m; ++i) {
        if (f(r, i) != 0.0) {
          fired(i) += 1.0;
          l0 += 1.0;
        }
      }
    }
  }
  const double nn = static_cast<double>(std::max<Index>(n, 1));
  out.firing_freq = fired / nn;
  out.mean_l0 = l0 / nn;
  out.mse = sq_err / (nn * static_cast<double>(data.cols()));
  if (n > 0) {
    const RowVector mean = data.colwise().mean();
    out.data_variance = (data.rowwise() - mean).squaredNorm() / (nn * static_cast<double>(data.cols()));
  }
  out.n_repr = count_represented(out.firing_freq, alive_threshold);
  out.n_dead = sae.width() - out.n_repr;
  return out;
}

FiringStats firing_frequency(const SaeParams& sae, const Matrix& data, double alive_threshold) {
  if (data.rows() < 1) throw InputError("firing_frequency: need at least one sample");
  const SaeMetrics m = evaluate_sae(sae, data, alive_threshold);
  return FiringStats{m.firing_freq, m.n_repr, m.mean_l0};
}

TrainResult train_sae(SaeParams sae, const Matrix& data, const TrainConfig& config) {
  check_dims(sae, data.cols());
  if (data.rows() < 2) throw InputError("train_sae: need at least two samples");
  if (config.epochs < 1 || config.batch_size < 1) throw ConfigError("TrainConfig: epochs >= 1 and batch_size >= 1");
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction < 1.0)) {
    throw ConfigError("TrainConfig: holdout_fraction in [0, 1)");
  }

  const auto n = static_cast<std::size_t>(data.rows());
  Rng split_rng = make_rng(config.seed, 0);
  const auto perm = random_permutation(n, split_rng);
  auto n_hold = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.holdout_fraction));
  if (n_hold >= n) n_hold = 0;
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
  std::vector<std::size_t> hold_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  const Matrix train = gather_rows(data, train_idx, 0, train_idx.size());
  const Matrix held = hold_idx.empty() ? train : gather_rows(data, hold_idx, 0, hold_idx.size());

  if (config.init_decoder_bias_to_mean) {
    sae.b_dec = train.colwise().mean().transpose();
  }

  const auto m = static_cast<Index>(sae.width());
  const Index d = data.cols();
  Matrix v_enc = Matrix::Zero(m, d);
  Matrix v_dec = Matrix::Zero(m, d);
  Vector v_benc = Vector::Zero(m);
  Vector v_bdec = Vector::Zero(d);
  const double lambda = sae.arch == SaeArch::TopK ? 0.0 : sae.lambda_l1;

  TrainResult result;
  const std::size_t n_train = train_idx.size();
  std::vector<std::size_t> order(n_train);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr * schedule_factor(epoch, config.epochs);
    if (sae.arch == SaeArch::JumpRelu && epoch == config.epochs / 2) {
      calibrate_jump_thresholds(sae, train, config.jumprelu_percentile);
    }
    Rng order_rng = make_rng(config.seed, epoch + 1);
    order = random_permutation(n_train, order_rng);
    Vector fired = Vector::Zero(m);

    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      const Matrix x = gather_rows(train, order, start, end);
      const double bsz = static_cast<double>(end - start);

      const Matrix centered = x.rowwise() - sae.b_dec.transpose();
      Matrix f = centered * sae.w_enc.transpose();
      f.rowwise() += sae.b_enc.transpose();
      Matrix mask(f.rows(), f.cols());
      for (Index r = 0; r < f.rows(); ++r) {
        activate_row(sae, f.row(r), mask.row(r));
      }
      Matrix err = f * sae.w_dec;
      err.rowwise() += sae.b_dec.transpose();
      err -= x;

      Matrix g_pre = err * sae.w_dec.transpose();
      if (lambda > 0.0) g_pre.array() += lambda;
      g_pre.array() *= mask.array();

      Matrix g_dec = f.transpose() * err / bsz;
      // Drop the radial component so the unit-norm projection does not fight the step.
      for (Index i = 0; i < m; ++i) {
        g_dec.row(i) -= g_dec.row(i).dot(sae.w_dec.row(i)) * sae.w_dec.row(i);
      }
      const Matrix g_enc = g_pre.transpose() * centered / bsz;
      const Vector g_benc = g_pre.colwise().sum().transpose() / bsz;
      const Vector g_bdec = (err.colwise().sum().transpose() - sae.w_enc.transpose() * g_pre.colwise().sum().transpose()) / bsz;

      v_dec = config.momentum * v_dec - lr * g_dec;
      v_enc = config.momentum * v_enc - lr * g_enc;
      v_benc = config.momentum * v_benc - lr * g_benc;
      v_bdec = config.momentum * v_bdec - lr * g_bdec;
      sae.w_dec += v_dec;
      sae.w_enc += v_enc;
      sae.b_enc += v_benc;
      sae.b_dec += v_bdec;
      renormalize_decoder(sae);

      fired += mask.colwise().sum().transpose();
      if (!std::isfinite(err.squaredNorm()) || !sae.w_enc.allFinite()) {
        throw TrainingError("SAE training diverged: reconstruction error is not finite", epoch);
      }
    }

    const SaeMetrics train_metrics = evaluate_sae(sae, train, config.alive_threshold);
    if (!std::isfinite(train_metrics.mse)) {
      throw TrainingError("SAE training diverged: reconstruction error is not finite", epoch);
    }
    result.learning_curve.push_back(train_metrics.mse);

    if (config.resample_dead && epoch + 1 < config.epochs) {
      // Re-seed never-firing features at the worst-reconstructed training rows.
      const Matrix recon = decode_batch(sae, encode_batch(sae, train));
      const Matrix resid = train - recon;
      std::vector<std::size_t> worst(n_train);
      std::iota(worst.begin(), worst.end(), std::size_t{0});
      std::stable_sort(worst.begin(), worst.end(), [&resid](std::size_t a, std::size_t b) {
        return resid.row(static_cast<Index>(a)).squaredNorm() > resid.row(static_cast<Index>(b)).squaredNorm();
      });
      std::size_t next = 0;
      for (Index i = 0; i < m && next < n_train; ++i) {
        if (fired(i) > 0.0) continue;
        const RowVector dir = resid.row(static_cast<Index>(worst[next++]));
        const double norm = dir.norm();
        if (norm == 0.0) continue;
        sae.w_dec.row(i) = dir / norm;
        sae.w_enc.row(i) = 0.2 * dir / norm;
        sae.b_enc(i) = 0.0;
        v_dec.row(i).setZero();
        v_enc.row(i).setZero();
        v_benc(i) = 0.0;
      }
    }
  }

  result.metrics = evaluate_sae(sae, held, config.alive_threshold);
  result.params = std::move(sae);
  return result;
}

SaeParams shuffle_decoder(const SaeParams& sae, const std::vector<std::size_t>& permutation) {
  if (permutation.size() != sae.width()) throw InputError("shuffle_decoder: permutation size mismatch");
  SaeParams out = sae;
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    if (permutation[i] >= sae.width()) throw InputError("shuffle_decoder: index out of range");
    out.w_dec.row(static_cast<Index>(i)) = sae.w_dec.row(static_cast<Index>(permutation[i]));
  }
  return out;
}

SaeParams make_control(const SaeParams& sae, ControlKind kind, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5AE);
  const auto m = static_cast<Index>(sae.width());
  const auto d = static_cast<Index>(sae.dim());
  SaeParams out = sae;
  switch (kind) {
    case ControlKind::RandomDecoder:
      out.w_dec = random_orthonormal_frame(m, d, rng);
      break;
    case ControlKind::ShuffledDecoder:
      out = shuffle_decoder(sae, random_permutation(sae.width(), rng));
      break;
    case ControlKind::RandomEncoder:
      out.w_enc = random_orthonormal_frame(m, d, rng);
      out.b_enc.setZero();
      break;
  }
  return out;
}

}  // namespace kappa
