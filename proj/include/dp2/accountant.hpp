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

#ifndef DP2_ACCOUNTANT_HPP_
#define DP2_ACCOUNTANT_HPP_

#include <cstdint>
#include <vector>

namespace dp2 {

// Renyi order grid: dense near the small orders where the (eps, delta)
// minimum usually lands, plus all integers up to 256.
std::vector<double> default_rdp_orders();

// Renyi divergence at order alpha of one subsampled Gaussian release with
// sampling ratio q and noise multiplier sigma. q == 1 is the plain Gaussian
// mechanism with RDP alpha / (2 sigma^2).
double rdp_subsampled_gaussian(double q, double sigma, double alpha);

// Classic RDP -> (eps, delta) conversion over an order grid:
//   eps = min_alpha [ rdp(alpha) + log(1/delta) / (alpha - 1) ].
double rdp_to_epsilon(const std::vector<double>& orders,
                      const std::vector<double>& rdp, double delta);

// Accumulates per-step RDP over the order grid. One ledger per training
// run; composition across steps is additive. sigma == 0 marks the ledger
// unbounded instead of throwing, so non-private runs can share the code
// path.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(std::vector<double> orders = default_rdp_orders());

  void record_step(double q, double sigma);
  void record_steps(double q, double sigma, std::int64_t count);

  double epsilon(double delta) const;
  std::int64_t steps() const { return steps_; }
  bool unbounded() const { return unbounded_; }
  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& rdp() const { return rdp_; }

 private:
  std::vector<double> orders_;
  std::vector<double> rdp_;
  std::int64_t steps_ = 0;
  bool unbounded_ = false;
  // Per-step RDP row cached for the last (q, sigma) pair seen.
  double cached_q_ = -1.0;
  double cached_sigma_ = -1.0;
  std::vector<double> cached_row_;
};

// Offline recomputation of the spent epsilon for `steps` identical
// releases. steps == 0 returns 0 (no data touched).
double epsilon_for(double q, double sigma, std::int64_t steps, double delta,
                   const std::vector<double>& orders = default_rdp_orders());

// Smallest sigma (on a bisection grid of width 1e-3) with
// epsilon_for(q, sigma, steps, delta) <= target_eps. Throws if the target
// is unreachable below sigma_ceiling.
double calibrate_sigma(double target_eps, double delta, double q,
                       std::int64_t steps, double sigma_ceiling = 1e3);

}  // namespace dp2

#endif  // DP2_ACCOUNTANT_HPP_
