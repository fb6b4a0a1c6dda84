// Copyright 2026 The dp2 Authors.
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

#include "dp2/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace dp2 {

double LrSchedule::at(Phase phase, std::int64_t t) const {
  if (kind == Kind::kInvSqrt) {
    return alpha0 / std::sqrt(static_cast<double>(t + 1));
  }
  return phase == Phase::kSgd ? lr_sgd : lr_adaptive;
}

void LrSchedule::validate() const {
  if (kind == Kind::kInvSqrt) {
    if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be > 0");
    return;
  }
  if (!(lr_sgd > 0.0) || !(lr_adaptive > 0.0)) {
    throw std::invalid_argument("learning rates must be > 0");
  }
}

DpSquaredState DpSquaredState::init(std::int64_t dim, std::int64_t s1,
                                    std::int64_t s2, double beta,
                                    double eps_adapt) {
  if (s1 < 1 || s2 < 1) throw std::invalid_argument("phase lengths must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must be in (0, 1)");
  }
  if (!(eps_adapt > 0.0)) throw std::invalid_argument("eps_adapt must be > 0");
  DpSquaredState state;
  state.accum.resize(dim, 0.0);
  state.moment.resize(dim, 0.0);
  state.s1 = s1;
  state.s2 = s2;
  state.beta = beta;
  state.eps_adapt = eps_adapt;
  return state;
}

AdaptiveState AdaptiveState::init(std::int64_t dim, double beta,
                                  double eps_adapt) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must be in (0, 1)");
  }
  if (!(eps_adapt > 0.0)) throw std::invalid_argument("eps_adapt must be > 0");
  AdaptiveState state;
  state.moment.resize(dim, 0.0);
  state.beta = beta;
  state.eps_adapt = eps_adapt;
  return state;
}

Ablation1State Ablation1State::init(std::int64_t dim, std::int64_t s,
                                    double beta, double eps_adapt) {
  if (s < 1) throw std::invalid_argument("delay must be >= 1");
  Ablation1State state;
  state.accum.resize(dim, 0.0);
  state.moment.resize(dim, 0.0);
  state.s = s;
  state.beta = beta;
  state.eps_adapt = eps_adapt;
  return state;
}

DenseVec bias_corrected_moment(const DenseVec& accum, std::int64_t s1,
                               double sigma, double threshold,
                               std::int64_t batch_size) {
  if (s1 < 1) throw std::invalid_argument("s1 must be >= 1");
  const double s = static_cast<double>(s1);
  const double b = static_cast<double>(batch_size);
  const double noise_var = std::isinf(threshold)
                               ? 0.0
                               : sigma * sigma * threshold * threshold /
                                     (s * b * b);
  DenseVec out(accum.dim());
  for (std::int64_t j = 0; j < accum.dim(); ++j) {
    const double u = accum[j] / s;
    out[j] = std::max(0.0, u * u - noise_var);
  }
  return out;
}

namespace {

// Moment refresh from the averaged accumulator ("line 5"); the rule choice
// changes nothing else in the engine.
void refresh_moment(UpdateRule rule, DenseVec& moment, const DenseVec& accum,
                    std::int64_t s1, double beta, bool bias_correction,
                    double sigma, double threshold, std::int64_t batch_size) {
  const double s = static_cast<double>(s1);
  const double noise_var =
      (bias_correction && !std::isinf(threshold))
          ? sigma * sigma * threshold * threshold /
                (s * static_cast<double>(batch_size) *
                 static_cast<double>(batch_size))
          : 0.0;
  for (std::int64_t j = 0; j < moment.dim(); ++j) {
    const double u = accum[j] / s;
    double m = u * u;
    if (noise_var > 0.0) m = std::max(0.0, m - noise_var);
    switch (rule) {
      case UpdateRule::kRmsProp:
        moment[j] = beta * moment[j] + (1.0 - beta) * m;
        break;
      case UpdateRule::kAdaGrad:
        moment[j] += m;
        break;
      case UpdateRule::kYogi: {
        const double sign = u - moment[j] * moment[j] >= 0.0 ? 1.0 : -1.0;
        moment[j] += (1.0 - beta) * sign * m;
        // The signed update can push the estimate negative; sqrt needs >= 0.
        moment[j] = std::max(moment[j], 0.0);
        break;
      }
    }
  }
}

struct Privatized {
  DenseVec grad;  // averaged (possibly noisy) batch gradient
  double clip_fraction = 0.0;
  double raw_l2_mean = 0.0;
  double clean_l1 = std::numeric_limits<double>::quiet_NaN();
};

// clip -> sum -> noise -> average for one task. Consumes out.sums[task].
Privatized privatize_batch(const ModelParams& params, const Dataset& data,
                           std::span<const std::int64_t> batch,
                           const DenseVec* precond, double threshold,
                           const PrivacyConfig& privacy,
                           const StepOptions& opts, Rng& noise_rng,
                           BatchWorkspace& ws, BatchStats& stats) {
  const ClipTask task{precond, threshold};
  accumulate_clipped(params, data, batch, std::span(&task, 1),
                     opts.track_clean_grad, opts.threads, ws, stats);
  const double b = static_cast<double>(batch.size());
  Privatized result;
  result.grad = std::move(stats.sums[0]);
  if (privacy.sigma > 0.0) {
    gaussian_mechanism_inplace(result.grad, privacy.sigma, threshold,
                               noise_rng);
  }
  scale_inplace(result.grad, 1.0 / b);
  result.clip_fraction = static_cast<double>(stats.clip_counts[0]) / b;
  result.raw_l2_mean = stats.raw_l2_sum / b;
  if (stats.has_raw) result.clean_l1 = l1_norm(stats.raw_sum) / b;
  return result;
}

}  // namespace

StepReport dp2_step(DpSquaredState& state, ModelParams& params,
                    const Dataset& data, std::span<const std::int64_t> batch,
                    const PrivacyConfig& privacy, const StepOptions& opts,
                    Rng& noise_rng, PrivacyLedger* ledger, BatchWorkspace& ws) {
  const Phase phase = state.phase();
  const double threshold =
      phase == Phase::kSgd ? privacy.clip_sgd : privacy.clip_adaptive;
  DenseVec precond;
  if (phase == Phase::kAdaptive) {
    ew_sqrt_add_into(state.moment, state.eps_adapt, precond);
  }
  BatchStats stats;
  Privatized p = privatize_batch(params, data, batch,
                                 phase == Phase::kAdaptive ? &precond : nullptr,
                                 threshold, privacy, opts, noise_rng, ws,
                                 stats);
  add_scaled_inplace(state.accum, 1.0, p.grad);
  add_scaled_inplace(params.flat, -opts.lr.at(phase, state.t), p.grad);
  if (ledger != nullptr) {
    ledger->record_step(privacy.sampling_ratio(), privacy.sigma);
  }

  StepReport report;
  report.phase = phase;
  report.clip_fraction = p.clip_fraction;
  report.update_l2 = l2_norm(p.grad);
  report.update_l1 = l1_norm(p.grad);
  report.precond_l1 = phase == Phase::kAdaptive
                          ? l1_norm(precond)
                          : static_cast<double>(params.dim());
  report.raw_grad_l2_mean = p.raw_l2_mean;
  report.clean_grad_l1 = p.clean_l1;
  report.mechanism_calls = 1;

  // Advance the schedule. Refreshing the moment when an SGD phase completes
  // is equivalent to refreshing at the start of the next step, and it keeps
  // the state consistent between steps: adaptive-phase accumulation is
  // discarded at the cycle boundary and never feeds the moment.
  state.t += 1;
  const std::int64_t r = state.t % state.cycle();
  if (r == state.s1) {
    refresh_moment(opts.rule, state.moment, state.accum, state.s1, state.beta,
                   opts.bias_correction, privacy.sigma, privacy.clip_sgd,
                   privacy.batch_size);
    state.last_accum_l1_over_s =
        l1_norm(state.accum) / static_cast<double>(state.s1);
    state.moment_updates += 1;
    state.accum.fill(0.0);
    report.moment_updated = true;
  } else if (r == 0) {
    state.accum.fill(0.0);
  }
  report.accum_l1_over_s = state.last_accum_l1_over_s;
  return report;
}

StepReport dp_sgd_step(ModelParams& params, const Dataset& data,
                       std::span<const std::int64_t> batch,
                       const PrivacyConfig& privacy, const StepOptions& opts,
                       std::int64_t t, Rng& noise_rng, PrivacyLedger* ledger,
                       BatchWorkspace& ws) {
  BatchStats stats;
  Privatized p = privatize_batch(params, data, batch, nullptr,
                                 privacy.clip_sgd, privacy, opts, noise_rng,
                                 ws, stats);
  add_scaled_inplace(params.flat, -opts.lr.at(Phase::kSgd, t), p.grad);
  if (ledger != nullptr) {
    ledger->record_step(privacy.sampling_ratio(), privacy.sigma);
  }
  StepReport report;
  report.phase = Phase::kSgd;
  report.clip_fraction = p.clip_fraction;
  report.update_l2 = l2_norm(p.grad);
  report.update_l1 = l1_norm(p.grad);
  report.precond_l1 = static_cast<double>(params.dim());
  report.raw_grad_l2_mean = p.raw_l2_mean;
  report.clean_grad_l1 = p.clean_l1;
  report.mechanism_calls = 1;
  return report;
}

StepReport dp_adaptive_step(AdaptiveState& state, ModelParams& params,
                            const Dataset& data,
                            std::span<const std::int64_t> batch,
                            const PrivacyConfig& privacy,
                            const StepOptions& opts, Rng& noise_rng,
                            PrivacyLedger* ledger, BatchWorkspace& ws) {
  BatchStats stats;
  Privatized p = privatize_batch(params, data, batch, nullptr,
                                 privacy.clip_sgd, privacy, opts, noise_rng,
                                 ws, stats);
  // Moment refresh from the noisy gradient, then the preconditioned update.
  for (std::int64_t j = 0; j < state.moment.dim(); ++j) {
    const double g = p.grad[j];
    switch (opts.rule) {
      case UpdateRule::kRmsProp:
        state.moment[j] =
            state.beta * state.moment[j] + (1.0 - state.beta) * g * g;
        break;
      case UpdateRule::kAdaGrad:
        state.moment[j] += g * g;
        break;
      case UpdateRule::kYogi: {
        const double sign =
            g - state.moment[j] * state.moment[j] >= 0.0 ? 1.0 : -1.0;
        state.moment[j] += (1.0 - state.beta) * sign * g * g;
        state.moment[j] = std::max(state.moment[j], 0.0);
        break;
      }
    }
  }
  const double lr = opts.lr.at(Phase::kAdaptive, state.t);
  double precond_l1 = 0.0;
  double update_l2 = 0.0, update_l1 = 0.0;
  for (std::int64_t j = 0; j < params.flat.dim(); ++j) {
    const double d = std::sqrt(state.moment[j]) + state.eps_adapt;
    const double u = p.grad[j] / d;
    params.flat[j] -= lr * u;
    precond_l1 += d;
    update_l2 += u * u;
    update_l1 += std::fabs(u);
  }
  if (ledger != nullptr) {
    ledger->record_step(privacy.sampling_ratio(), privacy.sigma);
  }
  state.t += 1;
  StepReport report;
  report.phase = Phase::kAdaptive;
  report.clip_fraction = p.clip_fraction;
  report.update_l2 = std::sqrt(update_l2);
  report.update_l1 = update_l1;
  report.precond_l1 = precond_l1;
  report.raw_grad_l2_mean = p.raw_l2_mean;
  report.clean_grad_l1 = p.clean_l1;
  report.mechanism_calls = 1;
  return report;
}

StepReport ablation_variant1_step(Ablation1State& state, ModelParams& params,
                                  const Dataset& data,
                                  std::span<const std::int64_t> batch,
                                  const PrivacyConfig& privacy,
                                  const StepOptions& opts, Rng& noise_rng,
                                  PrivacyLedger* ledger, BatchWorkspace& ws) {
  const bool refresh = state.t % state.s == 0;
  const double b = static_cast<double>(batch.size());
  const double q = privacy.sampling_ratio();

  DenseVec precond;
  std::vector<ClipTask> tasks;
  tasks.push_back({nullptr, privacy.clip_sgd});
  if (!refresh) {
    ew_sqrt_add_into(state.moment, state.eps_adapt, precond);
    tasks.push_back({&precond, privacy.clip_adaptive});
  }
  BatchStats stats;
  accumulate_clipped(params, data, batch, tasks, opts.track_clean_grad,
                     opts.threads, ws, stats);

  DenseVec raw_grad = std::move(stats.sums[0]);
  if (privacy.sigma > 0.0) {
    gaussian_mechanism_inplace(raw_grad, privacy.sigma, privacy.clip_sgd,
                               noise_rng);
  }
  scale_inplace(raw_grad, 1.0 / b);
  if (ledger != nullptr) ledger->record_step(q, privacy.sigma);
  add_scaled_inplace(state.accum, 1.0, raw_grad);

  StepReport report;
  report.raw_grad_l2_mean = stats.raw_l2_sum / b;
  if (stats.has_raw) report.clean_grad_l1 = l1_norm(stats.raw_sum) / b;
  report.mechanism_calls = 1;

  const DenseVec* final_grad = &raw_grad;
  DenseVec pre_grad;
  if (refresh) {
    refresh_moment(opts.rule, state.moment, state.accum, state.s, state.beta,
                   opts.bias_correction, privacy.sigma, privacy.clip_sgd,
                   privacy.batch_size);
    state.accum.fill(0.0);
    report.moment_updated = true;
    report.phase = Phase::kSgd;
    report.clip_fraction = static_cast<double>(stats.clip_counts[0]) / b;
    report.precond_l1 = static_cast<double>(params.dim());
  } else {
    pre_grad = std::move(stats.sums[1]);
    if (privacy.sigma > 0.0) {
      gaussian_mechanism_inplace(pre_grad, privacy.sigma,
                                 privacy.clip_adaptive, noise_rng);
    }
    scale_inplace(pre_grad, 1.0 / b);
    if (ledger != nullptr) ledger->record_step(q, privacy.sigma);
    final_grad = &pre_grad;
    report.mechanism_calls = 2;
    report.phase = Phase::kAdaptive;
    report.clip_fraction = static_cast<double>(stats.clip_counts[1]) / b;
    report.precond_l1 = l1_norm(precond);
  }
  add_scaled_inplace(params.flat, -opts.lr.at(report.phase, state.t),
                     *final_grad);
  report.update_l2 = l2_norm(*final_grad);
  report.update_l1 = l1_norm(*final_grad);
  state.t += 1;
  return report;
}

StepReport ablation_variant2_step(DpSquaredState& state, ModelParams& params,
                                  const Dataset& data,
                                  std::span<const std::int64_t> batch,
                                  const PrivacyConfig& privacy,
                                  const StepOptions& opts, Rng& noise_rng,
                                  PrivacyLedger* ledger, BatchWorkspace& ws) {
  const Phase phase = state.phase();
  BatchStats stats;
  // Single raw-gradient threshold in both phases; the preconditioner is
  // applied after the noise.
  Privatized p = privatize_batch(params, data, batch, nullptr,
                                 privacy.clip_sgd, privacy, opts, noise_rng,
                                 ws, stats);
  double precond_l1 = static_cast<double>(params.dim());
  if (phase == Phase::kAdaptive) {
    DenseVec precond;
    ew_sqrt_add_into(state.moment, state.eps_adapt, precond);
    for (std::int64_t j = 0; j < p.grad.dim(); ++j) {
      p.grad[j] /= precond[j];
    }
    precond_l1 = l1_norm(precond);
  }
  add_scaled_inplace(state.accum, 1.0, p.grad);
  add_scaled_inplace(params.flat, -opts.lr.at(phase, state.t), p.grad);
  if (ledger != nullptr) {
    ledger->record_step(privacy.sampling_ratio(), privacy.sigma);
  }

  StepReport report;
  report.phase = phase;
  report.clip_fraction = p.clip_fraction;
  report.update_l2 = l2_norm(p.grad);
  report.update_l1 = l1_norm(p.grad);
  report.precond_l1 = precond_l1;
  report.raw_grad_l2_mean = p.raw_l2_mean;
  report.clean_grad_l1 = p.clean_l1;
  report.mechanism_calls = 1;

  state.t += 1;
  const std::int64_t r = state.t % state.cycle();
  if (r == state.s1) {
    refresh_moment(opts.rule, state.moment, state.accum, state.s1, state.beta,
                   opts.bias_correction, privacy.sigma, privacy.clip_sgd,
                   privacy.batch_size);
    state.last_accum_l1_over_s =
        l1_norm(state.accum) / static_cast<double>(state.s1);
    state.moment_updates += 1;
    state.accum.fill(0.0);
    report.moment_updated = true;
  } else if (r == 0) {
    state.accum.fill(0.0);
  }
  report.accum_l1_over_s = state.last_accum_l1_over_s;
  return report;
}

}  // namespace dp2
