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

#include "dp2/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dp2 {

void HsEstimate::update(double grad_l1, double accum_l1_over_s) {
  if (grad_l1 < 0.0 || accum_l1_over_s < 0.0) {
    throw std::invalid_argument("hs_update: norms must be >= 0");
  }
  const double denom =
      accum_l1_over_s + static_cast<double>(dim_) * eps_adapt_;
  const double ratio = grad_l1 / denom;
  ratios_.push_back(ratio);
  max_ratio_ = std::max(max_ratio_, ratio);
}

const std::vector<double>& PrecondSnapshot::bin_edges() {
  static const std::vector<double> edges = [] {
    std::vector<double> e;
    e.push_back(0.0);
    for (double exp10 = -12.0; exp10 <= 6.0; exp10 += 0.5) {
      e.push_back(std::pow(10.0, exp10));
    }
    return e;
  }();
  return edges;
}

PrecondSnapshot snapshot_preconditioner(const DenseVec& moment,
                                        std::int64_t step) {
  if (moment.dim() == 0) {
    throw std::invalid_argument("snapshot_preconditioner: empty moment");
  }
  const auto& edges = PrecondSnapshot::bin_edges();
  PrecondSnapshot snap;
  snap.step = step;
  snap.bin_counts.assign(edges.size(), 0);  // last bin is the overflow bin
  for (double v : moment) {
    if (v < 0.0) {
      throw std::invalid_argument("snapshot_preconditioner: negative moment");
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    snap.bin_counts[bin] += 1;
  }
  std::vector<double> sorted(moment.begin(), moment.end());
  std::sort(sorted.begin(), sorted.end());
  const auto at = [&](double p) {
    const auto i = static_cast<std::size_t>(
        p * static_cast<double>(sorted.size() - 1) + 0.5);
    return sorted[std::min(i, sorted.size() - 1)];
  };
  snap.q01 = at(0.01);
  snap.q25 = at(0.25);
  snap.q50 = at(0.50);
  snap.q75 = at(0.75);
  snap.q99 = at(0.99);
  return snap;
}

void MomentBoundAccumulator::add(const DenseVec& moment) {
  for (double v : moment) {
    sum_ += v;
    sum_sq_ += v * v;
  }
  count_ += moment.dim();
}

MomentBoundResult MomentBoundAccumulator::finish(double clip, double sigma,
                                       std::int64_t s,
                                       std::int64_t batch_size) const {
  if (count_ == 0) throw std::invalid_argument("moment_bound_check: empty series");
  MomentBoundResult result;
  const double b = static_cast<double>(batch_size);
  result.bound = clip * clip +
                 sigma * sigma * clip * clip / (static_cast<double>(s) * b * b);
  const double n = static_cast<double>(count_);
  result.empirical_mean = sum_ / n;
  const double var = std::max(0.0, sum_sq_ / n -
                                       result.empirical_mean *
                                           result.empirical_mean);
  result.std_error = std::sqrt(var / n);
  result.pass = result.empirical_mean <=
                result.bound * 1.05 + 3.0 * result.std_error;
  return result;
}

MomentBoundResult moment_bound_check(std::span<const DenseVec> moment_series, double clip,
                          double sigma, std::int64_t s,
                          std::int64_t batch_size) {
  MomentBoundAccumulator acc;
  for (const auto& v : moment_series) acc.add(v);
  return acc.finish(clip, sigma, s, batch_size);
}

}  // namespace dp2
