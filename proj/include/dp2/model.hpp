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

#ifndef DP2_MODEL_HPP_
#define DP2_MODEL_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "dp2/rng.hpp"
#include "dp2/vec.hpp"

namespace dp2 {

struct Dataset;  // defined in dp2/data.hpp

// One sparse training record. For binary classification `labels` holds a
// single 0/1 entry; for multi-label classification it holds the sorted set
// of active class indices.
struct SparseExample {
  SparseVec features;
  std::vector<std::int32_t> labels;
};

// One observed rating, with user/item already remapped to dense indices.
struct RatingTriple {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double rating = 0.0;
};

enum class MultiLabelLoss { kSigmoid, kSoftmax };

// Binary logistic regression over `dim` features plus a bias.
// Flat layout: [w_0 .. w_{dim-1}, bias].
struct LogRegSpec {
  std::int64_t dim = 0;
};

// Independent per-class linear classifiers over shared sparse features.
// Flat layout: class-major weight rows [c*dim .. (c+1)*dim), then one bias
// per class at [classes*dim + c].
struct MultiLabelSpec {
  std::int64_t dim = 0;
  std::int64_t classes = 0;
  MultiLabelLoss loss = MultiLabelLoss::kSigmoid;
};

// Matrix factorization with inner-product predictions and no bias terms.
// Flat layout: user embeddings first, then item embeddings, each row of
// length embed_dim.
struct MatFacSpec {
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::int64_t embed_dim = 0;
};

using ModelSpec = std::variant<LogRegSpec, MultiLabelSpec, MatFacSpec>;

std::int64_t param_count(const ModelSpec& spec);

struct ModelParams {
  ModelSpec spec;
  DenseVec flat;

  std::int64_t dim() const { return flat.dim(); }
};

// LogReg/MultiLabel start at zero; MatFac embeddings are uniform in
// [-0.1, 0.1] drawn from `rng`.
ModelParams init_params(const ModelSpec& spec, Rng& rng);

SparseVec per_example_grad(const ModelParams& params,
                           const SparseExample& example);
SparseVec per_example_grad(const ModelParams& params, const RatingTriple& r);
SparseVec per_example_grad(const ModelParams& params, const Dataset& data,
                           std::int64_t index);

double per_example_loss(const ModelParams& params,
                        const SparseExample& example);
double per_example_loss(const ModelParams& params, const RatingTriple& r);
double per_example_loss(const ModelParams& params, const Dataset& data,
                        std::int64_t index);

// metric is accuracy for classifiers (threshold 0.5 for LogReg, top-scoring
// class in the tag set for MultiLabel) and MSE for matrix factorization.
struct EvalResult {
  double loss = 0.0;
  double metric = 0.0;
};

// Mean loss/metric over the whole dataset. threads <= 1 runs the serial
// reference path; otherwise a deterministic OpenMP reduction is used.
EvalResult batch_eval(const ModelParams& params, const Dataset& data,
                      int threads = 1);
EvalResult batch_eval_serial(const ModelParams& params, const Dataset& data);

double sigmoid(double z);
double softplus(double z);

}  // namespace dp2

#endif  // DP2_MODEL_HPP_
