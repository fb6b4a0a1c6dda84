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

#include "dp2/reference.hpp"

#include <cmath>

namespace dp2::reference {

namespace {

// Mean raw gradient, accumulated in example order.
DenseVec batch_mean_grad(const ModelParams& params, const Dataset& data,
                         std::span<const std::int64_t> batch) {
  DenseVec sum(params.dim(), 0.0);
  for (const std::int64_t i : batch) {
    const SparseVec grad = per_example_grad(params, data, i);
    for (std::int64_t k = 0; k < grad.nnz(); ++k) {
      sum[grad.idx[k]] += grad.val[k];
    }
  }
  scale_inplace(sum, 1.0 / static_cast<double>(batch.size()));
  return sum;
}

}  // namespace

RmsPropState RmsPropState::init(std::int64_t dim, double beta, double eps) {
  RmsPropState state;
  state.moment.resize(dim, 0.0);
  state.beta = beta;
  state.eps = eps;
  return state;
}

DelayedRmsPropState DelayedRmsPropState::init(std::int64_t dim,
                                              std::int64_t s1, std::int64_t s2,
                                              double beta, double eps) {
  DelayedRmsPropState state;
  state.accum.resize(dim, 0.0);
  state.moment.resize(dim, 0.0);
  state.s1 = s1;
  state.s2 = s2;
  state.beta = beta;
  state.eps = eps;
  return state;
}

double sgd_step(ModelParams& params, const Dataset& data,
                std::span<const std::int64_t> batch, double lr) {
  const DenseVec g = batch_mean_grad(params, data, batch);
  add_scaled_inplace(params.flat, -lr, g);
  return static_cast<double>(params.dim());
}

double rmsprop_step(ModelParams& params, RmsPropState& state,
                    const Dataset& data, std::span<const std::int64_t> batch,
                    double lr) {
  const DenseVec g = batch_mean_grad(params, data, batch);
  double precond_l1 = 0.0;
  for (std::int64_t j = 0; j < params.dim(); ++j) {
    state.moment[j] =
        state.beta * state.moment[j] + (1.0 - state.beta) * g[j] * g[j];
    const double d = std::sqrt(state.moment[j]) + state.eps;
    params.flat[j] -= lr * g[j] / d;
    precond_l1 += d;
  }
  return precond_l1;
}

double delayed_rmsprop_step(ModelParams& params, DelayedRmsPropState& state,
                            const Dataset& data,
                            std::span<const std::int64_t> batch, double lr_sgd,
                            double lr_adaptive) {
  const bool adaptive = state.adaptive();
  const double b = static_cast<double>(batch.size());
  DenseVec update(params.dim(), 0.0);
  double precond_l1 = static_cast<double>(params.dim());
  if (!adaptive) {
    // Per-example accumulation in example order, like the private engine.
    for (const std::int64_t i : batch) {
      const SparseVec grad = per_example_grad(params, data, i);
      for (std::int64_t k = 0; k < grad.nnz(); ++k) {
        update[grad.idx[k]] += grad.val[k];
      }
    }
    scale_inplace(update, 1.0 / b);
  } else {
    DenseVec precond(params.dim());
    precond_l1 = 0.0;
    for (std::int64_t j = 0; j < params.dim(); ++j) {
      precond[j] = std::sqrt(state.moment[j]) + state.eps;
      precond_l1 += precond[j];
    }
    for (const std::int64_t i : batch) {
      const SparseVec grad = per_example_grad(params, data, i);
      for (std::int64_t k = 0; k < grad.nnz(); ++k) {
        update[grad.idx[k]] += grad.val[k] / precond[grad.idx[k]];
      }
    }
    scale_inplace(update, 1.0 / b);
  }
  add_scaled_inplace(state.accum, 1.0, update);
  add_scaled_inplace(params.flat, -(adaptive ? lr_adaptive : lr_sgd), update);

  state.t += 1;
  const std::int64_t r = state.t % (state.s1 + state.s2);
  if (r == state.s1) {
    const double s = static_cast<double>(state.s1);
    for (std::int64_t j = 0; j < state.moment.dim(); ++j) {
      const double u = state.accum[j] / s;
      state.moment[j] =
          state.beta * state.moment[j] + (1.0 - state.beta) * u * u;
    }
    state.accum.fill(0.0);
  } else if (r == 0) {
    state.accum.fill(0.0);
  }
  return precond_l1;
}

}  // namespace dp2::reference
