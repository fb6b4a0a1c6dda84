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

#ifndef DP2_OPTIMIZER_HPP_
#define DP2_OPTIMIZER_HPP_

#include <cstdint>
#include <limits>
#include <span>

#include "dp2/accountant.hpp"
#include "dp2/batch.hpp"
#include "dp2/privacy.hpp"

namespace dp2 {

enum class Phase { kSgd, kAdaptive };

// Selects only the moment-refresh rule; every other line of the engine is
// shared across variants.
enum class UpdateRule { kRmsProp, kAdaGrad, kYogi };

struct LrSchedule {
  enum class Kind { kConstant, kInvSqrt };
  Kind kind = Kind::kConstant;
  double lr_sgd = 0.1;
  double lr_adaptive = 0.1;
  double alpha0 = 0.1;

  // t counts steps from 0; the inverse-sqrt schedule uses alpha0/sqrt(t+1).
  double at(Phase phase, std::int64_t t) const;
  void validate() const;
};

// State of the phase-scheduled engine (dp2 and the noise-before-
// preconditioning ablation share it): step counter, gradient accumulator G,
// second-moment estimate v, phase lengths and constants.
struct DpSquaredState {
  std::int64_t t = 0;
  DenseVec accum;
  DenseVec moment;
  std::int64_t s1 = 1;
  std::int64_t s2 = 1;
  double beta = 0.9;
  double eps_adapt = 1e-5;

  std::int64_t moment_updates = 0;
  // ||G/s1||_1 of the accumulator consumed by the latest moment refresh.
  double last_accum_l1_over_s = std::numeric_limits<double>::quiet_NaN();

  static DpSquaredState init(std::int64_t dim, std::int64_t s1,
                             std::int64_t s2, double beta, double eps_adapt);
  std::int64_t cycle() const { return s1 + s2; }
  Phase phase() const { return t % cycle() < s1 ? Phase::kSgd : Phase::kAdaptive; }
};

// Vanilla DP adaptive baseline state (per-step moment refresh from the
// noisy gradient).
struct AdaptiveState {
  std::int64_t t = 0;
  DenseVec moment;
  double beta = 0.9;
  double eps_adapt = 1e-5;

  static AdaptiveState init(std::int64_t dim, double beta, double eps_adapt);
};

// Two-query ablation state: moment refreshed every s steps from the raw
// noisy-gradient accumulator.
struct Ablation1State {
  std::int64_t t = 0;
  DenseVec accum;
  DenseVec moment;
  std::int64_t s = 1;
  double beta = 0.9;
  double eps_adapt = 1e-5;

  static Ablation1State init(std::int64_t dim, std::int64_t s, double beta,
                             double eps_adapt);
};

struct StepOptions {
  UpdateRule rule = UpdateRule::kRmsProp;
  LrSchedule lr;
  bool bias_correction = false;
  // Also accumulate the unclipped raw gradient mean (diagnostics only; the
  // clean norms never enter a released quantity).
  bool track_clean_grad = false;
  int threads = 1;
};

struct StepReport {
  Phase phase = Phase::kSgd;
  double clip_fraction = 0.0;
  double update_l2 = 0.0;   // ||g~||_2 of the applied update gradient
  double update_l1 = 0.0;   // ||g~||_1 (noisy h(s) numerator)
  double precond_l1 = 0.0;  // ||D^t||_1
  double raw_grad_l2_mean = 0.0;
  double clean_grad_l1 = std::numeric_limits<double>::quiet_NaN();
  double accum_l1_over_s = std::numeric_limits<double>::quiet_NaN();
  int mechanism_calls = 0;
  bool moment_updated = false;
};

// max(0, (G/s1)^2 - sigma^2 C^2 / (s1 b^2)) coordinate-wise: removes the
// expected noise contribution from the squared-mean estimate.
DenseVec bias_corrected_moment(const DenseVec& accum, std::int64_t s1,
                               double sigma, double threshold,
                               std::int64_t batch_size);

// One iteration of the delayed-preconditioner engine: reset/refresh on the
// phase schedule, per-example precondition + clip with the phase threshold,
// Gaussian mechanism on the sum, accumulate, parameter update, one ledger
// step. The moment refresh runs when an SGD phase completes.
StepReport dp2_step(DpSquaredState& state, ModelParams& params,
                    const Dataset& data, std::span<const std::int64_t> batch,
                    const PrivacyConfig& privacy, const StepOptions& opts,
                    Rng& noise_rng, PrivacyLedger* ledger, BatchWorkspace& ws);

// DP-SGD baseline: the engine with D == 1 forever.
StepReport dp_sgd_step(ModelParams& params, const Dataset& data,
                       std::span<const std::int64_t> batch,
                       const PrivacyConfig& privacy, const StepOptions& opts,
                       std::int64_t t, Rng& noise_rng, PrivacyLedger* ledger,
                       BatchWorkspace& ws);

// Vanilla DP adaptive baseline: privatize the raw gradient first, then
// refresh the moment from the noisy gradient, then precondition the update.
StepReport dp_adaptive_step(AdaptiveState& state, ModelParams& params,
                            const Dataset& data,
                            std::span<const std::int64_t> batch,
                            const PrivacyConfig& privacy,
                            const StepOptions& opts, Rng& noise_rng,
                            PrivacyLedger* ledger, BatchWorkspace& ws);

// Extra-query ablation: every step privatizes the raw gradient for the
// accumulator; on non-refresh steps a second mechanism release privatizes
// the preconditioned gradients and drives the update (two ledger steps).
StepReport ablation_variant1_step(Ablation1State& state, ModelParams& params,
                                  const Dataset& data,
                                  std::span<const std::int64_t> batch,
                                  const PrivacyConfig& privacy,
                                  const StepOptions& opts, Rng& noise_rng,
                                  PrivacyLedger* ledger, BatchWorkspace& ws);

// Noise-before-preconditioning ablation: clip raw gradients with the single
// clip_sgd threshold, add noise, then divide the averaged gradient by D.
StepReport ablation_variant2_step(DpSquaredState& state, ModelParams& params,
                                  const Dataset& data,
                                  std::span<const std::int64_t> batch,
                                  const PrivacyConfig& privacy,
                                  const StepOptions& opts, Rng& noise_rng,
                                  PrivacyLedger* ledger, BatchWorkspace& ws);

}  // namespace dp2

#endif  // DP2_OPTIMIZER_HPP_
