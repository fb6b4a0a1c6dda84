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

#include "dp2/privacy.hpp"

#include <cmath>
#include <stdexcept>

namespace dp2 {

void PrivacyConfig::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (!(clip_sgd > 0.0)) throw std::invalid_argument("clip_sgd must be > 0");
  if (!(clip_adaptive > 0.0)) {
    throw std::invalid_argument("clip_adaptive must be > 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (dataset_size < batch_size) {
    throw std::invalid_argument("batch_size must be <= dataset_size");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
}

namespace {

double clip_scale(double norm, double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("clip: threshold must be > 0");
  }
  if (std::isinf(threshold) || norm <= threshold) return 1.0;
  return threshold / norm;
}

}  // namespace

double clip_inplace(SparseVec& g, double threshold) {
  const double scale = clip_scale(l2_norm(g), threshold);
  if (scale != 1.0) {
    for (auto& v : g.val) v *= scale;
  }
  return scale;
}

double clip_inplace(DenseVec& g, double threshold) {
  const double scale = clip_scale(l2_norm(g), threshold);
  if (scale != 1.0) scale_inplace(g, scale);
  return scale;
}

SparseVec clip(const SparseVec& g, double threshold) {
  SparseVec out = g;
  clip_inplace(out, threshold);
  return out;
}

DenseVec clip(const DenseVec& g, double threshold) {
  DenseVec out = g;
  clip_inplace(out, threshold);
  return out;
}

void gaussian_mechanism_inplace(DenseVec& sum, double sigma, double threshold,
                                Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return;
  const double stddev = sigma * threshold;
  for (auto& x : sum) x += stddev * rng.normal();
}

DenseVec gaussian_mechanism(const DenseVec& sum, double sigma,
                            double threshold, Rng& rng) {
  DenseVec out = sum;
  gaussian_mechanism_inplace(out, sigma, threshold, rng);
  return out;
}

}  // namespace dp2
