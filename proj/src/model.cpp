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

#include "dp2/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dp2/data.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dp2 {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

std::int64_t param_count(const ModelSpec& spec) {
  if (const auto* lr = std::get_if<LogRegSpec>(&spec)) return lr->dim + 1;
  if (const auto* ml = std::get_if<MultiLabelSpec>(&spec)) {
    return ml->dim * ml->classes + ml->classes;
  }
  const auto& mf = std::get<MatFacSpec>(spec);
  return (mf.num_users + mf.num_items) * mf.embed_dim;
}

ModelParams init_params(const ModelSpec& spec, Rng& rng) {
  ModelParams params{spec, DenseVec(param_count(spec))};
  if (std::holds_alternative<MatFacSpec>(spec)) {
    for (auto& x : params.flat) x = rng.uniform(-0.1, 0.1);
  }
  return params;
}

namespace {

void require_features_in_range(const SparseExample& example,
                               std::int64_t dim) {
  if (!example.features.idx.empty() && example.features.idx.back() >= dim) {
    throw std::invalid_argument("example feature index " +
                                std::to_string(example.features.idx.back()) +
                                " out of range for model dim " +
                                std::to_string(dim));
  }
}

double binary_label(const SparseExample& example) {
  if (example.labels.size() != 1 ||
      (example.labels[0] != 0 && example.labels[0] != 1)) {
    throw std::invalid_argument("binary example needs a single 0/1 label");
  }
  return static_cast<double>(example.labels[0]);
}

double logit(const ModelParams& params, const SparseVec& x,
             std::int64_t weight_offset, std::int64_t bias_index) {
  double z = params.flat[bias_index];
  for (std::int64_t k = 0; k < x.nnz(); ++k) {
    z += params.flat[weight_offset + x.idx[k]] * x.val[k];
  }
  return z;
}

// Softmax target distribution: uniform over the example's true tags.
void softmax_probs(const ModelParams& params, const MultiLabelSpec& spec,
                   const SparseVec& x, std::vector<double>& probs) {
  probs.resize(static_cast<std::size_t>(spec.classes));
  double zmax = -1e300;
  for (std::int64_t c = 0; c < spec.classes; ++c) {
    const double z =
        logit(params, x, c * spec.dim, spec.classes * spec.dim + c);
    probs[static_cast<std::size_t>(c)] = z;
    zmax = std::max(zmax, z);
  }
  double sum = 0.0;
  for (auto& p : probs) {
    p = std::exp(p - zmax);
    sum += p;
  }
  for (auto& p : probs) p /= sum;
}

}  // namespace

SparseVec per_example_grad(const ModelParams& params,
                           const SparseExample& example) {
  SparseVec grad;
  grad.dim = params.dim();
  if (const auto* lr = std::get_if<LogRegSpec>(&params.spec)) {
    require_features_in_range(example, lr->dim);
    const double y = binary_label(example);
    const double z = logit(params, example.features, 0, lr->dim);
    const double r = sigmoid(z) - y;
    const SparseVec& x = example.features;
    for (std::int64_t k = 0; k < x.nnz(); ++k) {
      grad.push(x.idx[k], r * x.val[k]);
    }
    grad.push(lr->dim, r);  // bias
    return grad;
  }
  if (const auto* ml = std::get_if<MultiLabelSpec>(&params.spec)) {
    require_features_in_range(example, ml->dim);
    const SparseVec& x = example.features;
    std::vector<double> residual(static_cast<std::size_t>(ml->classes));
    if (ml->loss == MultiLabelLoss::kSigmoid) {
      for (std::int64_t c = 0; c < ml->classes; ++c) {
        const double z = logit(params, x, c * ml->dim,
                               ml->classes * ml->dim + c);
        residual[static_cast<std::size_t>(c)] = sigmoid(z);
      }
      for (std::int32_t tag : example.labels) {
        if (tag < 0 || tag >= ml->classes) {
          throw std::invalid_argument("tag out of range: " +
                                      std::to_string(tag));
        }
        residual[static_cast<std::size_t>(tag)] -= 1.0;
      }
    } else {
      // No tags means no supervision: loss and gradient are both zero.
      if (example.labels.empty()) {
        std::fill(residual.begin(), residual.end(), 0.0);
      } else {
        softmax_probs(params, *ml, x, residual);
        const double t = 1.0 / static_cast<double>(example.labels.size());
        for (std::int32_t tag : example.labels) {
          if (tag < 0 || tag >= ml->classes) {
            throw std::invalid_argument("tag out of range: " +
                                        std::to_string(tag));
          }
          residual[static_cast<std::size_t>(tag)] -= t;
        }
      }
    }
    for (std::int64_t c = 0; c < ml->classes; ++c) {
      const double r = residual[static_cast<std::size_t>(c)];
      for (std::int64_t k = 0; k < x.nnz(); ++k) {
        grad.push(c * ml->dim + x.idx[k], r * x.val[k]);
      }
    }
    for (std::int64_t c = 0; c < ml->classes; ++c) {
      grad.push(ml->classes * ml->dim + c,
                residual[static_cast<std::size_t>(c)]);
    }
    return grad;
  }
  throw std::invalid_argument("sparse example fed to a rating model");
}

SparseVec per_example_grad(const ModelParams& params, const RatingTriple& r) {
  const auto* mf = std::get_if<MatFacSpec>(&params.spec);
  if (mf == nullptr) {
    throw std::invalid_argument("rating record fed to a non-rating model");
  }
  if (r.user < 0 || r.user >= mf->num_users || r.item < 0 ||
      r.item >= mf->num_items) {
    throw std::invalid_argument("rating user/item index out of range");
  }
  const std::int64_t ubase = r.user * mf->embed_dim;
  const std::int64_t ibase = (mf->num_users + r.item) * mf->embed_dim;
  double pred = 0.0;
  for (std::int64_t k = 0; k < mf->embed_dim; ++k) {
    pred += params.flat[ubase + k] * params.flat[ibase + k];
  }
  const double resid = 2.0 * (pred - r.rating);
  SparseVec grad;
  grad.dim = params.dim();
  for (std::int64_t k = 0; k < mf->embed_dim; ++k) {
    grad.push(ubase + k, resid * params.flat[ibase + k]);
  }
  for (std::int64_t k = 0; k < mf->embed_dim; ++k) {
    grad.push(ibase + k, resid * params.flat[ubase + k]);
  }
  return grad;
}

SparseVec per_example_grad(const ModelParams& params, const Dataset& data,
                           std::int64_t index) {
  if (data.kind == DataKind::kSparse) {
    return per_example_grad(params, data.examples[index]);
  }
  return per_example_grad(params, data.ratings[index]);
}

double per_example_loss(const ModelParams& params,
                        const SparseExample& example) {
  if (const auto* lr = std::get_if<LogRegSpec>(&params.spec)) {
    require_features_in_range(example, lr->dim);
    const double y = binary_label(example);
    const double z = logit(params, example.features, 0, lr->dim);
    return softplus(z) - y * z;
  }
  if (const auto* ml = std::get_if<MultiLabelSpec>(&params.spec)) {
    require_features_in_range(example, ml->dim);
    if (ml->loss == MultiLabelLoss::kSigmoid) {
      double loss = 0.0;
      std::size_t next_tag = 0;
      std::vector<std::int32_t> tags = example.labels;
      std::sort(tags.begin(), tags.end());
      for (std::int64_t c = 0; c < ml->classes; ++c) {
        const double z = logit(params, example.features, c * ml->dim,
                               ml->classes * ml->dim + c);
        double y = 0.0;
        if (next_tag < tags.size() && tags[next_tag] == c) {
          y = 1.0;
          ++next_tag;
        }
        loss += softplus(z) - y * z;
      }
      return loss;
    }
    std::vector<double> probs;
    softmax_probs(params, *ml, example.features, probs);
    if (example.labels.empty()) return 0.0;
    double loss = 0.0;
    const double t = 1.0 / static_cast<double>(example.labels.size());
    for (std::int32_t tag : example.labels) {
      loss -= t * std::log(std::max(probs[static_cast<std::size_t>(tag)],
                                    1e-300));
    }
    return loss;
  }
  throw std::invalid_argument("sparse example fed to a rating model");
}

double per_example_loss(const ModelParams& params, const RatingTriple& r) {
  const auto* mf = std::get_if<MatFacSpec>(&params.spec);
  if (mf == nullptr) {
    throw std::invalid_argument("rating record fed to a non-rating model");
  }
  const std::int64_t ubase = r.user * mf->embed_dim;
  const std::int64_t ibase = (mf->num_users + r.item) * mf->embed_dim;
  double pred = 0.0;
  for (std::int64_t k = 0; k < mf->embed_dim; ++k) {
    pred += params.flat[ubase + k] * params.flat[ibase + k];
  }
  const double e = pred - r.rating;
  return e * e;
}

double per_example_loss(const ModelParams& params, const Dataset& data,
                        std::int64_t index) {
  if (data.kind == DataKind::kSparse) {
    return per_example_loss(params, data.examples[index]);
  }
  return per_example_loss(params, data.ratings[index]);
}

namespace {

// loss plus 0/1 correctness (or squared error for ratings) for one record.
void eval_one(const ModelParams& params, const Dataset& data, std::int64_t i,
              double& loss, double& metric) {
  loss = per_example_loss(params, data, i);
  if (const auto* lr = std::get_if<LogRegSpec>(&params.spec)) {
    const SparseExample& ex = data.examples[i];
    const double z = logit(params, ex.features, 0, lr->dim);
    const double y = binary_label(ex);
    metric = ((z > 0.0) == (y > 0.5)) ? 1.0 : 0.0;
    return;
  }
  if (const auto* ml = std::get_if<MultiLabelSpec>(&params.spec)) {
    const SparseExample& ex = data.examples[i];
    std::int64_t best = 0;
    double best_z = -1e300;
    for (std::int64_t c = 0; c < ml->classes; ++c) {
      const double z = logit(params, ex.features, c * ml->dim,
                             ml->classes * ml->dim + c);
      if (z > best_z) {
        best_z = z;
        best = c;
      }
    }
    metric = 0.0;
    for (std::int32_t tag : ex.labels) {
      if (tag == best) {
        metric = 1.0;
        break;
      }
    }
    return;
  }
  metric = loss;  // squared error; the mean is the MSE
}

}  // namespace

EvalResult batch_eval_serial(const ModelParams& params, const Dataset& data) {
  const std::int64_t n = data.size();
  if (n == 0) throw std::invalid_argument("batch_eval: empty dataset");
  double loss_sum = 0.0, metric_sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double loss, metric;
    eval_one(params, data, i, loss, metric);
    loss_sum += loss;
    metric_sum += metric;
  }
  return {loss_sum / static_cast<double>(n),
          metric_sum / static_cast<double>(n)};
}

EvalResult batch_eval(const ModelParams& params, const Dataset& data,
                      int threads) {
#ifdef _OPENMP
  const std::int64_t n = data.size();
  if (n == 0) throw std::invalid_argument("batch_eval: empty dataset");
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  if (nthreads <= 1 || n < 256) return batch_eval_serial(params, data);
  std::vector<double> loss_part(nthreads, 0.0), metric_part(nthreads, 0.0);
  // Contiguous static chunks; partials combined in thread order so the
  // result is reproducible for a fixed thread count.
#pragma omp parallel num_threads(nthreads)
  {
    const int tid = omp_get_thread_num();
    const std::int64_t lo = n * tid / nthreads;
    const std::int64_t hi = n * (tid + 1) / nthreads;
    double loss_sum = 0.0, metric_sum = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      double loss, metric;
      eval_one(params, data, i, loss, metric);
      loss_sum += loss;
      metric_sum += metric;
    }
    loss_part[tid] = loss_sum;
    metric_part[tid] = metric_sum;
  }
  double loss_sum = 0.0, metric_sum = 0.0;
  for (int t = 0; t < nthreads; ++t) {
    loss_sum += loss_part[t];
    metric_sum += metric_part[t];
  }
  return {loss_sum / static_cast<double>(n),
          metric_sum / static_cast<double>(n)};
#else
  (void)threads;
  return batch_eval_serial(params, data);
#endif
}

}  // namespace dp2
