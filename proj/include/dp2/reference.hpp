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

#ifndef DP2_REFERENCE_HPP_
#define DP2_REFERENCE_HPP_

#include <cstdint>
#include <span>

#include "dp2/data.hpp"
#include "dp2/model.hpp"
#include "dp2/vec.hpp"

// Plain serial implementations of the non-private optimizers. They are both
// the baselines selectable from the harness and the reference the private
// engine is checked against when noise and clipping are disabled.
namespace dp2::reference {

struct RmsPropState {
  DenseVec moment;
  double beta = 0.9;
  double eps = 1e-5;

  static RmsPropState init(std::int64_t dim, double beta, double eps);
};

// Alternates s1 plain-SGD steps whose mean gradients fill the accumulator
// with s2 preconditioned steps reusing the stale moment; the moment is
// refreshed from the accumulator average each time the SGD phase ends.
struct DelayedRmsPropState {
  std::int64_t t = 0;
  DenseVec accum;
  DenseVec moment;
  std::int64_t s1 = 1;
  std::int64_t s2 = 1;
  double beta = 0.9;
  double eps = 1e-5;

  static DelayedRmsPropState init(std::int64_t dim, std::int64_t s1,
                                  std::int64_t s2, double beta, double eps);
  bool adaptive() const { return t % (s1 + s2) >= s1; }
};

// Returns ||D^t||_1 of the applied preconditioner (dim for plain SGD).
double sgd_step(ModelParams& params, const Dataset& data,
                std::span<const std::int64_t> batch, double lr);

double rmsprop_step(ModelParams& params, RmsPropState& state,
                    const Dataset& data, std::span<const std::int64_t> batch,
                    double lr);

double delayed_rmsprop_step(ModelParams& params, DelayedRmsPropState& state,
                            const Dataset& data,
                            std::span<const std::int64_t> batch, double lr_sgd,
                            double lr_adaptive);

}  // namespace dp2::reference

#endif  // DP2_REFERENCE_HPP_
