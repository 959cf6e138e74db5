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

#include "kappa/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <ceres/ceres.h>

#include "kappa/errors.hpp"
#include "kappa/linalg.hpp"
#include "kappa/stats.hpp"

namespace kappa {

namespace {

// Residuals of one model over all points, with analytic derivatives in the
// internal parameters.
using ResidualFn = std::function<void(const double* x, double* r, double* jac_row_major)>;

class CurveCost : public ceres::CostFunction {
 public:
  CurveCost(int n_residuals, int n_params, ResidualFn fn) : fn_(std::move(fn)) {
    set_num_residuals(n_residuals);
    mutable_parameter_block_sizes()->push_back(n_params);
  }

  bool Evaluate(double const* const* params, double* residuals, double** jacobians) const override {
    fn_(params[0], residuals, jacobians ? jacobians[0] : nullptr);
    for (int i = 0; i < num_residuals(); ++i) {
      if (!std::isfinite(residuals[i])) return false;
    }
    if (jacobians && jacobians[0]) {
      const int n = num_residuals() * parameter_block_sizes()[0];
      for (int i = 0; i < n; ++i) {
        if (!std::isfinite(jacobians[0][i])) return false;
      }
    }
    return true;
  }

 private:
  ResidualFn fn_;
};

struct LmOutcome {
  Vector x;
  double rss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

LmOutcome solve(int n_residuals, const ResidualFn& fn, Vector x, const Vector& lower, const Vector& upper,
                std::size_t max_iterations) {
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) x(i) = std::clamp(x(i), lower(i), upper(i));
  ceres::Problem problem;
  problem.AddResidualBlock(new CurveCost(n_residuals, n, fn), nullptr, x.data());
  for (int i = 0; i < n; ++i) {
    problem.SetParameterLowerBound(x.data(), i, lower(i));
    problem.SetParameterUpperBound(x.data(), i, upper(i));
  }
  ceres::Solver::Options options;
  options.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
  options.linear_solver_type = ceres::DENSE_QR;
  options.max_num_iterations = static_cast<int>(max_iterations);
  options.function_tolerance = 1e-15;
  options.gradient_tolerance = 1e-14;
  options.parameter_tolerance = 1e-14;
  options.num_threads = 1;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  ceres::Solver::Summary summary;
  ceres::Solve(options, &problem, &summary);

  LmOutcome out;
  out.x = x;
  out.rss = 2.0 * summary.final_cost;
  out.iterations = summary.iterations.size();
  out.converged = summary.termination_type == ceres::CONVERGENCE && summary.IsSolutionUsable();
  for (const auto& it : summary.iterations) out.trace.push_back(2.0 * it.cost);
  return out;
}

}  // namespace

std::string to_string(ExcludeRule rule) { return rule == ExcludeRule::None ? "NONE" : "POST_MINIMUM"; }

ExcludeRule parse_exclude_rule(const std::string& name) {
  if (name == "NONE") return ExcludeRule::None;
  if (name == "POST_MINIMUM") return ExcludeRule::PostMinimum;
  throw ConfigError("unknown exclusion rule '" + name + "' (expected NONE or POST_MINIMUM)");
}

double saturating_curve(double m, double kappa, double tau) { return kappa * (1.0 - std::exp(-m / tau)); }

double dip_curve(double m, double kappa, double tau, double a, double m0, double s) {
  return saturating_curve(m, kappa, tau) - a * std::exp(-(m - m0) * (m - m0) / (2.0 * s * s));
}

std::vector<CurvePoint> apply_exclusion(std::span<const CurvePoint> points, ExcludeRule rule,
                                        std::vector<double>* excluded) {
  std::vector<CurvePoint> kept(points.begin(), points.end());
  std::sort(kept.begin(), kept.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.m < b.m; });
  if (rule == ExcludeRule::None || kept.empty()) return kept;
  const auto min_it =
      std::min_element(kept.begin(), kept.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.n < b.n; });
  const double cut = min_it->m;
  std::vector<CurvePoint> out;
  for (const auto& p : kept) {
    if (p.m <= cut) {
      if (excluded) excluded->push_back(p.m);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

FitResult fit_saturating(std::span<const CurvePoint> points, const FitOptions& options) {
  FitResult result;
  const auto used = apply_exclusion(points, options.exclude, &result.excluded_pre_minimum);
  if (used.size() < 3) {
    throw FitError("saturating fit needs at least 3 points after exclusion, got " + std::to_string(used.size()), {});
  }
  for (const auto& p : used) {
    if (!(p.m > 0.0) || !std::isfinite(p.n)) throw InputError("saturating fit: widths must be positive, counts finite");
  }
  result.n_points_used = used.size();
  const std::size_t dof = used.size() - 2;
  if (dof == 2) result.warnings.push_back("only 2 residual degrees of freedom: Wald interval is wide");

  // Internal parameters are (log kappa, log tau).
  const ResidualFn residuals = [&used](const double* x, double* r, double* jac) {
    const double kappa = std::exp(x[0]);
    const double tau = std::exp(x[1]);
    for (std::size_t i = 0; i < used.size(); ++i) {
      const double e = std::exp(-used[i].m / tau);
      r[i] = kappa * (1.0 - e) - used[i].n;
      if (jac) {
        jac[2 * i] = kappa * (1.0 - e);
        jac[2 * i + 1] = -kappa * e * used[i].m / tau;
      }
    }
  };
  const Vector lower = Vector::Constant(2, -700.0);
  Vector upper(2);
  upper << (std::isfinite(options.kappa_max) ? std::log(options.kappa_max) : 700.0), std::log(options.tau_max);

  double n_max = 0.0;
  double m_max = 0.0;
  for (const auto& p : used) {
    n_max = std::max(n_max, p.n);
    m_max = std::max(m_max, p.m);
  }
  const double kappa0 = std::max(n_max, 1e-6);

  std::optional<LmOutcome> best;
  std::vector<double> trace;
  for (double tau0 : {m_max / 10.0, m_max, 10.0 * m_max}) {
    Vector x0(2);
    x0 << std::log(kappa0), std::log(tau0);
    LmOutcome o = solve(static_cast<int>(used.size()), residuals, x0, lower, upper, options.max_iterations);
    trace.insert(trace.end(), o.trace.begin(), o.trace.end());
    if (!o.converged || !std::isfinite(o.rss)) continue;
    if (!best || o.rss < best->rss) best = std::move(o);
  }
  if (!best) throw FitError("saturating fit did not converge from any start", trace);

  result.kappa_hat = std::exp(best->x(0));
  result.tau_hat = std::exp(best->x(1));
  result.rss = best->rss;
  result.iterations = best->iterations;
  const double tol = 1e-9;
  if (best->x(0) >= upper(0) - tol || best->x(1) >= upper(1) - tol || best->x(0) <= lower(0) + tol ||
      best->x(1) <= lower(1) + tol) {
    result.at_bound = true;
    result.warnings.push_back("fit parameter at its bound");
  }

  // Wald interval from the covariance in the natural parameters.
  Matrix jac(static_cast<Index>(used.size()), 2);
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double e = std::exp(-used[i].m / result.tau_hat);
    jac(static_cast<Index>(i), 0) = 1.0 - e;
    jac(static_cast<Index>(i), 1) = -result.kappa_hat * e * used[i].m / (result.tau_hat * result.tau_hat);
  }
  const double s2 = result.rss / static_cast<double>(dof);
  const Matrix jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Matrix> lu(jtj);
  const double z = normal_quantile(0.5 + 0.5 * options.wald_level);
  if (lu.isInvertible()) {
    const Matrix cov = s2 * lu.inverse();
    result.kappa_se = std::sqrt(std::max(cov(0, 0), 0.0));
    result.tau_se = std::sqrt(std::max(cov(1, 1), 0.0));
  } else {
    result.kappa_se = std::numeric_limits<double>::infinity();
    result.tau_se = std::numeric_limits<double>::infinity();
    result.warnings.push_back("singular Fisher information: Wald interval unbounded");
  }
  result.wald_ci_95 = {std::max(0.0, result.kappa_hat - z * result.kappa_se), result.kappa_hat + z * result.kappa_se};
  result.tau_wald_ci_95 = {std::max(0.0, result.tau_hat - z * result.tau_se), result.tau_hat + z * result.tau_se};
  return result;
}

DipFitResult fit_saturating_with_dip(std::span<const CurvePoint> points, const FitOptions& options) {
  std::vector<CurvePoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.m < b.m; });
  if (pts.size() < 6) throw FitError("dip fit needs at least 6 points", {});

  // Internal parameters: log kappa, log tau, log a, m0, log s.
  const ResidualFn residuals = [&pts](const double* x, double* r, double* jac) {
    const double kappa = std::exp(x[0]), tau = std::exp(x[1]), a = std::exp(x[2]), m0 = x[3], s = std::exp(x[4]);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double m = pts[i].m;
      const double e = std::exp(-m / tau);
      const double g = std::exp(-(m - m0) * (m - m0) / (2.0 * s * s));
      r[i] = kappa * (1.0 - e) - a * g - pts[i].n;
      if (jac) {
        double* row = jac + 5 * i;
        row[0] = kappa * (1.0 - e);
        row[1] = -kappa * e * m / tau;
        row[2] = -a * g;
        row[3] = -a * g * (m - m0) / (s * s);
        row[4] = -a * g * (m - m0) * (m - m0) / (s * s);
      }
    }
  };
  const double m_min = pts.front().m;
  const double m_max = pts.back().m;
  // The dip stays inside the sampled range and no narrower than half the
  // smallest width; tau may not collapse below a hundredth of it.
  Vector lower = Vector::Constant(5, -700.0);
  lower(1) = std::log(m_min / 100.0);
  lower(3) = m_min;
  lower(4) = std::log(m_min / 2.0);
  Vector upper = Vector::Constant(5, 700.0);
  if (std::isfinite(options.kappa_max)) upper(0) = std::log(options.kappa_max);
  upper(1) = std::log(options.tau_max);
  upper(3) = m_max;
  upper(4) = std::log(m_max);

  const auto min_it =
      std::min_element(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.n < b.n; });
  double n_max = 0.0;
  for (const auto& p : pts) n_max = std::max(n_max, p.n);
  upper(2) = std::log(10.0 * n_max + 1.0);

  std::optional<LmOutcome> best;
  std::vector<double> trace;
  for (double tau0 : {m_max / 10.0, m_max, 10.0 * m_max}) {
    for (double s_frac : {0.25, 0.5, 1.0}) {
      Vector x0(5);
      const double depth = std::max(0.5 * n_max - min_it->n, 0.1 * n_max + 1e-6);
      x0 << std::log(std::max(n_max, 1e-6)), std::log(tau0), std::log(depth), min_it->m, std::log(s_frac * min_it->m);
      LmOutcome o = solve(static_cast<int>(pts.size()), residuals, x0, lower, upper, options.max_iterations);
      trace.insert(trace.end(), o.trace.begin(), o.trace.end());
      if (!o.converged || !std::isfinite(o.rss)) continue;
      if (!best || o.rss < best->rss) best = std::move(o);
    }
  }
  if (!best) throw FitError("dip fit did not converge from any start", trace);
  DipFitResult out;
  out.kappa_hat = std::exp(best->x(0));
  out.tau_hat = std::exp(best->x(1));
  out.dip_amplitude = std::exp(best->x(2));
  out.dip_center = best->x(3);
  out.dip_width = std::exp(best->x(4));
  out.rss = best->rss;
  out.n_points_used = pts.size();
  for (Index i = 0; i < 5; ++i) {
    if (best->x(i) >= upper(i) - 1e-9 || best->x(i) <= lower(i) + 1e-9) out.at_bound = true;
  }
  return out;
}

}  // namespace kappa
