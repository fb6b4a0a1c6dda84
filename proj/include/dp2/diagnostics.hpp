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

#ifndef DP2_DIAGNOSTICS_HPP_
#define DP2_DIAGNOSTICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dp2/vec.hpp"

namespace dp2 {

// Tracks the temporal gradient-similarity ratio
//   ||g^t||_1 / (||G/s||_1 + d * eps)
// where G/s is the accumulator average consumed by the latest moment
// refresh. Larger values mean staler preconditioners hurt more.
class HsEstimate {
 public:
  HsEstimate(std::int64_t dim, double eps_adapt, std::int64_t s)
      : dim_(dim), eps_adapt_(eps_adapt), s_(s) {}

  void update(double grad_l1, double accum_l1_over_s);

  const std::vector<double>& ratios() const { return ratios_; }
  double max_ratio() const { return max_ratio_; }
  std::int64_t dim() const { return dim_; }
  double eps_adapt() const { return eps_adapt_; }
  std::int64_t delay() const { return s_; }

 private:
  std::int64_t dim_;
  double eps_adapt_;
  std::int64_t s_;
  std::vector<double> ratios_;
  double max_ratio_ = 0.0;
};

// Histogram over log-spaced bins plus the {1,25,50,75,99} percent
// quantiles of the moment estimate at one step.
struct PrecondSnapshot {
  std::int64_t step = 0;
  std::vector<std::int64_t> bin_counts;  // sums to dim
  double q01 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q99 = 0.0;

  // Shared bin edges: [0, 1e-12), then half-decade bins up to 1e+6, then
  // the open-ended overflow bin.
  static const std::vector<double>& bin_edges();
};

PrecondSnapshot snapshot_preconditioner(const DenseVec& moment,
                                        std::int64_t step);

struct MomentBoundResult {
  double bound = 0.0;
  double empirical_mean = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

// Streaming accumulator for the moment bound C^2 + sigma^2 C^2 / (s b^2):
// passes when the mean of the moment over coordinates and snapshots stays
// within 5% of the bound plus three standard errors.
class MomentBoundAccumulator {
 public:
  void add(const DenseVec& moment);
  MomentBoundResult finish(double clip, double sigma, std::int64_t s,
                      std::int64_t batch_size) const;

 private:
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  std::int64_t count_ = 0;
};

MomentBoundResult moment_bound_check(std::span<const DenseVec> moment_series, double clip,
                          double sigma, std::int64_t s,
                          std::int64_t batch_size);

}  // namespace dp2

#endif  // DP2_DIAGNOSTICS_HPP_
